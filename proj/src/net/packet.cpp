#include "strack/net/packet.hpp"

namespace strack::net {

std::string_view to_string(PacketKind kind) {
    switch (kind) {
    case PacketKind::Data: return "DATA";
    case PacketKind::Sack: return "SACK";
    case PacketKind::Probe: return "PROBE";
    case PacketKind::Nack: return "NACK";
    case PacketKind::Ack: return "ACK";
    case PacketKind::Cnp: return "CNP";
    case PacketKind::PfcPause: return "PFC_PAUSE";
    case PacketKind::PfcResume: return "PFC_RESUME";
    }
    return "UNKNOWN";
}

}  // namespace strack::net
