#include "strack/net/ecmp.hpp"

#include <stdexcept>

#include "strack/sim/rng.hpp"

namespace strack::net {

std::uint32_t ecmp_hash(FlowId flow, Entropy entropy, std::uint32_t switch_id) {
    std::uint64_t h = sim::splitmix64((static_cast<std::uint64_t>(switch_id) << 32) | flow);
    h = sim::splitmix64(h ^ entropy);
    return static_cast<std::uint32_t>(h >> 32);
}

std::uint16_t ecmp_select(FlowId flow, Entropy entropy, std::uint32_t switch_id,
                          std::span<const std::uint16_t> eligible_ports) {
    if (eligible_ports.empty()) {
        throw std::logic_error("ecmp_select: no eligible port");
    }
    return eligible_ports[ecmp_hash(flow, entropy, switch_id) % eligible_ports.size()];
}

}  // namespace strack::net
