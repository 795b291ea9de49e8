#include "strack/net/topology.hpp"

#include <algorithm>
#include <numeric>

#include "strack/sim/rng.hpp"

namespace strack::net {

TopologySpec TopologySpec::fat_tree(std::uint32_t hosts, std::uint32_t hosts_per_tor, std::uint32_t spines,
                                    LinkRate host_speed, std::uint32_t oversub) {
    if (hosts_per_tor == 0 || spines == 0 || oversub == 0) {
        throw ConfigError("fat_tree: hosts_per_tor, spines and oversub must be positive");
    }
    TopologySpec spec;
    spec.hosts = hosts;
    spec.tors = hosts / hosts_per_tor;
    spec.spines = spines;
    spec.host_link_speed = host_speed;
    spec.oversub_ratio = oversub;
    const std::int64_t down = static_cast<std::int64_t>(hosts_per_tor) * host_speed.bps;
    spec.uplink_speed = LinkRate{down / (static_cast<std::int64_t>(oversub) * spines)};
    return spec;
}

void TopologySpec::validate() const {
    if (hosts < 2) {
        throw ConfigError("topology.hosts must be at least 2");
    }
    if (tors == 0 || hosts % tors != 0) {
        throw ConfigError("topology.hosts must be a multiple of the ToR count");
    }
    if (spines == 0) {
        throw ConfigError("topology.spines must be positive");
    }
    if (oversub_ratio != 1 && oversub_ratio != 4 && oversub_ratio != 8) {
        throw ConfigError("topology.oversub must be one of 1, 4, 8 (got " + std::to_string(oversub_ratio) + ")");
    }
    if (host_link_speed.bps <= 0 || uplink_speed.bps <= 0) {
        throw ConfigError("topology link speeds must be positive");
    }
    const std::int64_t down = static_cast<std::int64_t>(hosts_per_tor()) * host_link_speed.bps;
    const std::int64_t up = static_cast<std::int64_t>(oversub_ratio) * spines * uplink_speed.bps;
    if (down != up) {
        throw ConfigError("topology: uplink capacity does not match the oversubscription ratio");
    }
    if (!has_exact_byte_time(host_link_speed) || !has_exact_byte_time(uplink_speed)) {
        throw ConfigError("topology: link speeds must serialize a byte in whole picoseconds");
    }
    if (mtu_bytes == 0 || control_bytes == 0 || control_bytes > mtu_bytes) {
        throw ConfigError("topology: invalid mtu/control packet size");
    }
    for (const auto& [t, s] : failed_links) {
        if (t >= tors || s >= spines) {
            throw ConfigError("topology.failed_links: (" + std::to_string(t) + "," + std::to_string(s) +
                              ") is out of range");
        }
    }
    if (tors > 1) {
        for (std::uint32_t a = 0; a < tors; ++a) {
            for (std::uint32_t b = a + 1; b < tors; ++b) {
                bool shared = false;
                for (std::uint32_t s = 0; s < spines && !shared; ++s) {
                    shared = link_alive(a, s) && link_alive(b, s);
                }
                if (!shared) {
                    throw ConfigError("topology: tor" + std::to_string(a) + " and tor" + std::to_string(b) +
                                      " are disconnected after link failures");
                }
            }
        }
    }
    if (derive_link_latency(*this) <= SimTime::zero()) {
        throw ConfigError("topology.net_base_rtt is too small for the link speeds");
    }
}

SimTime derive_link_latency(const TopologySpec& spec) {
    const std::uint64_t mtu = spec.mtu_bytes;
    const std::uint64_t ctrl = spec.control_bytes;
    const SimTime ser = serialization_time(mtu, spec.host_link_speed) * 2 +
                        serialization_time(mtu, spec.uplink_speed) * 2 +
                        serialization_time(ctrl, spec.host_link_speed) * 2 +
                        serialization_time(ctrl, spec.uplink_speed) * 2;
    return (spec.net_base_rtt - ser) / 8;
}

std::uint64_t bdp_bytes(LinkRate rate, SimTime rtt) { return bytes_in(rtt, rate); }

std::set<std::pair<std::uint32_t, std::uint32_t>> random_uplink_failures(const TopologySpec& spec,
                                                                          std::uint32_t per_tor,
                                                                          std::uint64_t seed) {
    if (per_tor >= spec.spines) {
        throw ConfigError("cannot fail every uplink of a ToR");
    }
    sim::RngStream rng(seed, sim::stream_id("link_failures"));
    std::set<std::pair<std::uint32_t, std::uint32_t>> out;
    std::vector<std::uint32_t> spines(spec.spines);
    for (std::uint32_t t = 0; t < spec.tors; ++t) {
        std::iota(spines.begin(), spines.end(), 0U);
        for (std::uint32_t k = 0; k < per_tor; ++k) {
            const auto j = k + rng.uniform_index(spec.spines - k);
            std::swap(spines[k], spines[j]);
            out.insert({t, spines[k]});
        }
    }
    return out;
}

}  // namespace strack::net
