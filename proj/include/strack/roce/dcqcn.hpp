#pragma once

#include <cstdint>
#include <vector>

#include "strack/sim/time.hpp"

namespace strack::roce {

using sim::LinkRate;
using sim::SimTime;

struct DcqcnParams {
    double g = 1.0 / 256.0;
    SimTime cnp_interval = sim::microseconds(50);
    SimTime alpha_timer = sim::microseconds(55);
    SimTime rate_timer = sim::microseconds(55);
    std::uint64_t byte_counter = 10ULL * 1024 * 1024;
    std::uint32_t fast_recovery_steps = 5;
    double rai_fraction = 0.001;   ///< additive increase step, fraction of line rate
    double rhai_fraction = 0.005;  ///< hyper increase step
    double min_rate_fraction = 0.01;

    void validate() const;
};

/// Reaction-point rate control. Timers are evaluated lazily: call
/// advance(now) before reading the rate.
class Dcqcn {
public:
    Dcqcn(LinkRate line_rate, DcqcnParams params);

    void on_cnp(SimTime now);
    void on_bytes_sent(std::uint64_t bytes, SimTime now);
    void advance(SimTime now);

    double rate_bps() const { return rc_; }
    double target_bps() const { return rt_; }
    double alpha() const { return alpha_; }
    double line_bps() const { return line_; }
    std::uint64_t cnps() const { return cnps_; }

private:
    void increase(bool from_timer);

    DcqcnParams p_;
    double line_;
    double rc_;
    double rt_;
    double alpha_ = 1.0;
    bool active_ = false;
    SimTime alpha_anchor_;
    SimTime rate_anchor_;
    std::uint64_t bytes_since_ = 0;
    std::uint32_t timer_count_ = 0;
    std::uint32_t byte_count_ = 0;
    std::uint64_t cnps_ = 0;
};

/// Packets per queue pair when `packets` are dealt round-robin over `qps`.
std::vector<std::uint64_t> qp_stripe(std::uint64_t packets, std::uint32_t qps);

}  // namespace strack::roce
