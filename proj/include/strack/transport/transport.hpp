#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "strack/net/network.hpp"

namespace strack::transport {

using net::HostId;
using net::MsgId;
using sim::SimTime;

struct MessageInfo {
    MsgId id = 0;
    HostId src = 0;
    HostId dst = 0;
    std::uint64_t bytes = 0;
};

/// Lifecycle callbacks, used by the workload replayer and telemetry.
class TransportListener {
public:
    virtual ~TransportListener() = default;
    virtual void on_message_started(MsgId, SimTime) {}    ///< first packet on the wire
    virtual void on_message_delivered(MsgId, SimTime) {}  ///< every byte at the receiver
    virtual void on_message_completed(MsgId, SimTime) {}  ///< last byte acknowledged at the sender
    virtual void on_bytes_delivered(MsgId, std::uint64_t /*bytes*/, SimTime) {}
};

struct TransportStats {
    std::uint64_t data_packets_sent = 0;
    std::uint64_t data_bytes_sent = 0;
    std::uint64_t retransmitted_bytes = 0;
    std::uint64_t recoveries = 0;
    std::uint64_t probe_recoveries = 0;
    std::uint64_t probes_sent = 0;
    std::uint64_t rto_fires = 0;
    std::uint64_t acks_processed = 0;
    std::uint64_t cwnd_checks = 0;
    std::uint64_t path_checks = 0;
    std::uint64_t window_overflows = 0;
    std::uint64_t nacks_sent = 0;
    std::uint64_t cnps_sent = 0;
};

struct MessageProgress {
    MessageInfo info;
    std::uint64_t delivered = 0;
    std::uint64_t acked = 0;
    std::uint64_t retransmitted = 0;
    bool started = false;
};

/// Common bookkeeping shared by the STrack and RoCE transports.
class Transport : public net::PacketSink {
public:
    explicit Transport(net::Network& net) : net_(net) {}

    /// Hands a released message to the transport at the current time.
    virtual void submit(const MessageInfo& msg) = 0;
    virtual std::string name() const = 0;

    void set_listener(TransportListener* l) { listener_ = l; }
    const TransportStats& stats() const { return stats_; }
    const MessageProgress& progress(MsgId id) const { return messages_.at(id); }
    std::size_t connection_count() const { return connections_; }

protected:
    MessageProgress& register_message(const MessageInfo& msg);
    void note_started(MsgId id);
    void note_delivered(MsgId id, std::uint64_t bytes);
    void note_acked(MsgId id, std::uint64_t bytes);
    void note_retransmit(MsgId id, std::uint64_t bytes);

    net::Network& net_;
    TransportListener* listener_ = nullptr;
    TransportStats stats_;
    std::unordered_map<MsgId, MessageProgress> messages_;
    std::size_t connections_ = 0;
};

}  // namespace strack::transport
