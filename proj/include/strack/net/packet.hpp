#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "strack/sim/time.hpp"

namespace strack::net {

using sim::SimTime;

using FlowId = std::uint32_t;
using HostId = std::uint32_t;
using Psn = std::uint64_t;
using MsgId = std::uint64_t;
using Entropy = std::uint16_t;

enum class PacketKind : std::uint8_t {
    Data,
    Sack,
    Probe,
    Nack,
    Ack,
    Cnp,
    PfcPause,
    PfcResume,
};

std::string_view to_string(PacketKind kind);

/// Selective acknowledgment carried by STrack SACK packets.
struct SackPayload {
    Psn epsn = 0;
    Psn sack_base = 0;           ///< bits describe [sack_base, sack_base + 64)
    std::uint64_t sack_bitmap = 0;
    std::uint64_t bytes_recvd = 0;  ///< duplicates eliminated
    std::uint32_t ooo_count = 0;
    Entropy echo_entropy = 0;
    bool echo_ecn = false;
    SimTime echo_tx_timestamp;
    bool for_probe = false;
};

struct Packet {
    FlowId flow_id = 0;
    Psn psn = 0;
    std::uint32_t size_bytes = 0;
    PacketKind kind = PacketKind::Data;
    Entropy entropy = 0;
    bool ecn_ce = false;
    bool retransmit = false;
    SimTime tx_timestamp;
    HostId src = 0;
    HostId dst = 0;
    MsgId msg_id = 0;
    std::uint16_t qp = 0;            ///< RoCE queue pair index within the connection
    std::uint16_t ingress_port = 0;  ///< set by the switch that buffers the packet
    Psn probe_base = 0;              ///< requested SACK base for PROBE
    bool last_of_msg = false;        ///< RoCE: final packet of a message on its queue pair
    std::optional<SackPayload> sack;
};

/// Control packets ride a strict-priority class that is never paused,
/// dropped for buffer reasons, or ECN-marked.
constexpr bool is_control(PacketKind k) {
    return k == PacketKind::Sack || k == PacketKind::Nack || k == PacketKind::Ack ||
           k == PacketKind::Cnp || k == PacketKind::PfcPause || k == PacketKind::PfcResume;
}

/// Only DATA may be dropped for lack of buffer or marked with CE.
constexpr bool is_droppable(PacketKind k) { return k == PacketKind::Data; }
constexpr bool is_markable(PacketKind k) { return k == PacketKind::Data; }

}  // namespace strack::net
