#pragma once

#include <cstdint>
#include <span>

#include "strack/net/packet.hpp"

namespace strack::net {

/// Hash of (flow, entropy, switch) folded onto `eligible_count` ports. Pure:
/// a given (flow, entropy) always leaves a switch on the same port as long as
/// the eligible set is unchanged.
std::uint32_t ecmp_hash(FlowId flow, Entropy entropy, std::uint32_t switch_id);

/// Returns an element of `eligible_ports`. Requires a non-empty span.
std::uint16_t ecmp_select(FlowId flow, Entropy entropy, std::uint32_t switch_id,
                          std::span<const std::uint16_t> eligible_ports);

}  // namespace strack::net
