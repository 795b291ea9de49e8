#pragma once

#include <cstdint>
#include <vector>

namespace strack::net {

struct PfcAction {
    std::uint16_t ingress = 0;
    bool pause = false;  ///< false means RESUME
};

/// Switch-wide shared buffer with per-ingress PFC accounting.
///
/// An ingress is paused when its usage exceeds alpha * (free shared buffer)
/// and resumed once usage falls below that threshold minus the hysteresis.
class SharedBuffer {
public:
    SharedBuffer(std::uint64_t total_bytes, std::size_t ingress_ports, double alpha, std::uint64_t hysteresis_bytes);

    void add(std::uint16_t ingress, std::uint64_t bytes);
    void remove(std::uint16_t ingress, std::uint64_t bytes);

    /// Re-evaluates every ingress and returns the PAUSE/RESUME frames to emit.
    /// Never returns two PAUSEs for an ingress without a RESUME in between.
    std::vector<PfcAction> evaluate();

    double threshold() const;
    bool paused(std::uint16_t ingress) const { return paused_[ingress]; }
    std::uint64_t usage(std::uint16_t ingress) const { return usage_[ingress]; }
    std::uint64_t used() const { return used_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t peak_used() const { return peak_; }

private:
    std::uint64_t total_;
    double alpha_;
    std::uint64_t hysteresis_;
    std::vector<std::uint64_t> usage_;
    std::vector<bool> paused_;
    std::uint64_t used_ = 0;
    std::uint64_t peak_ = 0;
};

/// Buffer size for a switch of the given aggregate capacity, scaled from
/// 256 MB per 51.2 Tbps.
std::uint64_t scaled_switch_buffer(double capacity_bps);

}  // namespace strack::net
