#pragma once

#include <cstdint>

#include "strack/sim/time.hpp"

namespace strack::transport {

using sim::LinkRate;
using sim::SimTime;

/// Congestion-control and reliability constants for one deployment.
/// Every rate-dependent value is derived from the host link speed and the
/// network base RTT; 100 Gbps / 12 us is the reference point where the
/// scaling factors equal one.
struct CcParams {
    SimTime net_base_rtt = sim::microseconds(8);
    SimTime target_qdelay = sim::microseconds(8);
    SimTime target_qhigh = sim::microseconds(24);
    double ewma = 0.125;
    double bdp_sf = 1.0;
    double delay_sf = 1.0;
    double beta = 0.0;   ///< bytes
    double eta = 0.0;    ///< bytes
    double alpha = 0.0;  ///< bytes per picosecond of delay headroom
    double gamma = 0.8;
    std::uint32_t mtu = 4096;
    double max_cwnd = 0.0;  ///< bytes
    std::uint32_t max_paths = 256;
    std::uint32_t min_ooo_threshold = 5;
    std::uint32_t probe_multiplier = 3;
    SimTime rto = sim::microseconds(500);

    std::uint32_t coalesce_bytes = 4 * 4096;
    std::uint32_t window_packets = 1024;
    std::uint32_t control_bytes = 64;
    /// Optional whole-bitmap reset every `bitmap_reset_rtts` base RTTs (0 = off).
    std::uint32_t bitmap_reset_rtts = 0;

    /// Fills every field from the deployment; `max_cwnd` defaults to one BDP.
    static CcParams derive(LinkRate host_rate, SimTime net_base_rtt, std::uint32_t mtu);

    std::uint64_t bdp() const;
    /// Throws std::invalid_argument naming the first bad field.
    void validate() const;
};

}  // namespace strack::transport
