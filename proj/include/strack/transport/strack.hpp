#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "strack/transport/algorithms.hpp"
#include "strack/transport/transport.hpp"

namespace strack::transport {

class StrackTransport;

enum class PsnState : std::uint8_t { Inflight, Acked, Lost };

struct PsnRecord {
    PsnState state = PsnState::Inflight;
    std::uint32_t size = 0;
    MsgId msg = 0;
    SimTime last_tx;
    std::uint16_t tx_count = 0;
};

/// Sending half of one STrack connection. Messages share a single PSN space
/// and leave in FIFO order.
class StrackSender : public net::TxSource, public sim::EventTarget {
public:
    StrackSender(StrackTransport& owner, net::FlowId flow, HostId src, HostId dst, const CcParams& params,
                 bool oblivious);

    void enqueue_message(MsgId id, std::uint64_t bytes);
    std::optional<net::Packet> pull(SimTime now) override;
    void on_sack(const net::Packet& pkt);
    void on_event(std::uint32_t kind, std::uint64_t arg) override;

    double cwnd() const { return cc_.cwnd; }
    const CcState& cc() const { return cc_; }
    const PathState& paths() const { return paths_; }
    std::uint64_t achieved_bdp() const { return achieved_.achieved; }
    /// bytes_sent - bytes_recvd - bytes_claimed_retransmit
    std::int64_t inflight_bytes() const;
    std::uint64_t bytes_sent() const { return bytes_sent_; }
    std::uint64_t bytes_recvd() const { return bytes_recvd_; }
    std::uint64_t bytes_claimed() const { return bytes_claimed_; }
    bool in_recovery() const { return recovery_.has_value(); }
    bool outstanding() const { return snd_una_ < next_psn_; }
    bool has_unsent() const { return !pending_.empty(); }
    Psn next_psn() const { return next_psn_; }

private:
    enum TimerKind : std::uint32_t { kProbe = 1, kRto = 2 };

    struct PendingMessage {
        MsgId id;
        std::uint64_t remaining;
    };
    struct Recovery {
        Psn epsn;
        Psn high;
    };

    PsnRecord& record(Psn psn) { return records_[psn - snd_una_]; }
    std::uint64_t merge(const net::SackPayload& s);
    void ack_one(Psn psn, std::uint64_t& acked);
    void mark_lost(Psn psn);
    void ooo_loss(const net::SackPayload& s);
    void declare_all_lost();
    void send_probe();
    void arm(TimerKind kind, SimTime at);
    void check_invariants() const;

    StrackTransport& owner_;
    net::Network& net_;
    net::FlowId flow_;
    HostId src_;
    HostId dst_;
    CcParams p_;
    bool oblivious_;

    CcState cc_;
    PathState paths_;
    AchievedBdpState achieved_;

    std::deque<PendingMessage> pending_;
    std::deque<PsnRecord> records_;  ///< PSNs [snd_una_, next_psn_)
    Psn snd_una_ = 0;
    Psn next_psn_ = 0;
    Psn known_epsn_ = 0;
    std::optional<Psn> highest_acked_;
    std::set<Psn> lost_;
    std::optional<Recovery> recovery_;

    std::uint64_t bytes_sent_ = 0;
    std::uint64_t bytes_recvd_ = 0;
    std::uint64_t bytes_claimed_ = 0;
    std::uint64_t inflight_sum_ = 0;

    SimTime probe_deadline_ = SimTime::infinite();
    SimTime rto_deadline_ = SimTime::infinite();
    bool probe_event_pending_ = false;
    bool rto_event_pending_ = false;
    bool probe_outstanding_ = false;
    bool sack_since_probe_ = false;
    SimTime last_progress_ts_;
    SimTime last_bitmap_reset_;
};

/// Receiving half of one STrack connection.
class StrackReceiver {
public:
    explicit StrackReceiver(std::uint32_t window) : state_(window) {}

    const ReceiverState& state() const { return state_; }
    ReceiverState& state() { return state_; }

private:
    ReceiverState state_;
};

class StrackTransport : public Transport {
public:
    StrackTransport(net::Network& net, CcParams params, bool oblivious);

    void submit(const MessageInfo& msg) override;
    void deliver(net::Packet&& pkt, HostId at) override;
    std::string name() const override { return oblivious_ ? "strack_oblivious_spray" : "strack"; }

    const CcParams& params() const { return params_; }
    StrackSender* sender(HostId src, HostId dst);
    std::vector<const StrackSender*> senders() const;

private:
    friend class StrackSender;

    struct Connection {
        std::unique_ptr<StrackSender> sender;
        std::unique_ptr<StrackReceiver> receiver;
        HostId src;
        HostId dst;
    };

    Connection& connection(HostId src, HostId dst);
    void on_data(Connection& c, net::Packet&& pkt);

    CcParams params_;
    bool oblivious_;
    std::map<std::pair<HostId, HostId>, std::size_t> index_;
    std::vector<Connection> conns_;
};

}  // namespace strack::transport
