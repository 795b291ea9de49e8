#include "strack/net/shared_buffer.hpp"

#include <algorithm>
#include <stdexcept>

namespace strack::net {

SharedBuffer::SharedBuffer(std::uint64_t total_bytes, std::size_t ingress_ports, double alpha,
                           std::uint64_t hysteresis_bytes)
    : total_(total_bytes), alpha_(alpha), hysteresis_(hysteresis_bytes), usage_(ingress_ports, 0),
      paused_(ingress_ports, false) {}

void SharedBuffer::add(std::uint16_t ingress, std::uint64_t bytes) {
    usage_.at(ingress) += bytes;
    used_ += bytes;
    peak_ = std::max(peak_, used_);
}

void SharedBuffer::remove(std::uint16_t ingress, std::uint64_t bytes) {
    if (usage_.at(ingress) < bytes) {
        throw std::logic_error("shared buffer underflow on ingress " + std::to_string(ingress));
    }
    usage_[ingress] -= bytes;
    used_ -= bytes;
}

double SharedBuffer::threshold() const {
    const std::uint64_t free = used_ >= total_ ? 0 : total_ - used_;
    return alpha_ * static_cast<double>(free);
}

std::vector<PfcAction> SharedBuffer::evaluate() {
    std::vector<PfcAction> out;
    const double thr = threshold();
    for (std::size_t i = 0; i < usage_.size(); ++i) {
        const double u = static_cast<double>(usage_[i]);
        if (!paused_[i] && u > thr) {
            paused_[i] = true;
            out.push_back({static_cast<std::uint16_t>(i), true});
        } else if (paused_[i] && (u < thr - static_cast<double>(hysteresis_) || usage_[i] == 0)) {
            paused_[i] = false;
            out.push_back({static_cast<std::uint16_t>(i), false});
        }
    }
    return out;
}

std::uint64_t scaled_switch_buffer(double capacity_bps) {
    constexpr double kReferenceBytes = 256.0 * 1024 * 1024;
    constexpr double kReferenceBps = 51.2e12;
    return static_cast<std::uint64_t>(kReferenceBytes * capacity_bps / kReferenceBps);
}

}  // namespace strack::net
