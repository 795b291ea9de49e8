#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "strack/sim/time.hpp"

namespace strack::net {

using sim::LinkRate;
using sim::SimTime;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 2-tier fat tree: hosts hang off ToRs, every ToR connects to every spine.
struct TopologySpec {
    std::uint32_t hosts = 32;
    std::uint32_t tors = 2;
    std::uint32_t spines = 2;
    LinkRate host_link_speed = sim::gbps(400);
    LinkRate uplink_speed = sim::gbps(400);
    std::uint32_t oversub_ratio = 1;
    std::set<std::pair<std::uint32_t, std::uint32_t>> failed_links;  ///< (tor, spine)
    SimTime net_base_rtt = sim::microseconds(8);
    std::uint32_t mtu_bytes = 4096;
    std::uint32_t control_bytes = 64;

    std::uint32_t hosts_per_tor() const { return hosts / tors; }
    std::uint32_t tor_of(std::uint32_t host) const { return host / hosts_per_tor(); }

    /// Builds a spec with the uplink speed derived from the oversubscription
    /// ratio: hosts_per_tor * host_speed = oversub * spines * uplink_speed.
    static TopologySpec fat_tree(std::uint32_t hosts, std::uint32_t hosts_per_tor, std::uint32_t spines,
                                 LinkRate host_speed, std::uint32_t oversub = 1);

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;

    bool link_alive(std::uint32_t tor, std::uint32_t spine) const {
        return !failed_links.contains({tor, spine});
    }
};

/// One-way propagation delay per hop, chosen so that a full-size DATA packet
/// crossing ToR-spine-ToR plus its control-sized ACK takes exactly
/// net_base_rtt on an idle network.
SimTime derive_link_latency(const TopologySpec& spec);

/// Bandwidth-delay product of a link at `rate` over net_base_rtt.
std::uint64_t bdp_bytes(LinkRate rate, SimTime rtt);

/// Picks `per_tor` failed uplinks on every ToR using `seed`.
std::set<std::pair<std::uint32_t, std::uint32_t>> random_uplink_failures(const TopologySpec& spec,
                                                                          std::uint32_t per_tor,
                                                                          std::uint64_t seed);

}  // namespace strack::net
