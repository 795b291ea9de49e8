#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "strack/roce/dcqcn.hpp"
#include "strack/transport/transport.hpp"

namespace strack::roce {

using net::HostId;
using net::MsgId;
using net::Psn;

struct RoceParams {
    std::uint32_t qps_per_conn = 1;
    std::uint32_t mtu = 4096;
    std::uint32_t control_bytes = 64;
    std::uint32_t ack_coalesce_bytes = 4 * 4096;
    SimTime rto = sim::milliseconds(1);
    DcqcnParams dcqcn;

    void validate() const;
};

class RoceTransport;

/// One queue pair: a fixed entropy, a PSN space, rate pacing and go-back-N.
class RoceQp : public net::TxSource, public sim::EventTarget {
public:
    RoceQp(RoceTransport& owner, net::FlowId flow, std::uint16_t index, HostId src, HostId dst, net::Entropy entropy,
           LinkRate line_rate);

    void append(MsgId msg, std::uint32_t size, bool last);
    std::optional<net::Packet> pull(SimTime now) override;
    void on_ack(Psn epsn);
    void on_nack(Psn epsn);
    void on_cnp();
    void on_event(std::uint32_t kind, std::uint64_t arg) override;

    net::Entropy entropy() const { return entropy_; }
    const Dcqcn& dcqcn() const { return dcqcn_; }
    std::uint64_t rewinds() const { return rewinds_; }

private:
    enum TimerKind : std::uint32_t { kPace = 1, kRto = 2 };

    struct Slot {
        MsgId msg;
        std::uint32_t size;
        bool last;
    };

    void ack_through(Psn epsn);
    void arm_rto(SimTime at);

    RoceTransport& owner_;
    net::FlowId flow_;
    std::uint16_t index_;
    HostId src_;
    HostId dst_;
    net::Entropy entropy_;
    Dcqcn dcqcn_;

    std::deque<Slot> slots_;  ///< PSNs [una_, una_ + slots_.size())
    Psn una_ = 0;
    Psn next_psn_ = 0;
    Psn max_sent_ = 0;  ///< one past the highest PSN ever sent
    SimTime next_send_;
    bool pace_pending_ = false;
    SimTime rto_deadline_ = SimTime::infinite();
    bool rto_pending_ = false;
    std::uint64_t rewinds_ = 0;
};

struct RoceRxQp {
    Psn epsn = 0;
    std::optional<Psn> nacked_at;
    std::optional<SimTime> last_cnp;
    std::uint64_t unacked_bytes = 0;
};

class RoceTransport : public transport::Transport {
public:
    RoceTransport(net::Network& net, RoceParams params, std::uint64_t seed);

    void submit(const transport::MessageInfo& msg) override;
    void deliver(net::Packet&& pkt, HostId at) override;
    std::string name() const override { return "rocev2"; }

    const RoceParams& params() const { return params_; }
    /// Entropy of queue pair `qp` on the (src, dst) connection, creating the
    /// connection if needed. Lets callers predict a flow's path.
    net::Entropy qp_entropy(HostId src, HostId dst, std::uint16_t qp);
    std::optional<net::FlowId> flow_of(HostId src, HostId dst) const;
    std::vector<const RoceQp*> qps() const;

private:
    friend class RoceQp;

    struct Connection {
        HostId src;
        HostId dst;
        std::vector<std::unique_ptr<RoceQp>> tx;
        std::vector<RoceRxQp> rx;
        std::uint64_t next_stripe = 0;
    };

    Connection& connection(HostId src, HostId dst);
    void on_data(Connection& c, net::Packet&& pkt);
    void send_control(Connection& c, net::PacketKind kind, std::uint16_t qp, Psn psn, net::Entropy entropy);

    RoceParams params_;
    std::uint64_t seed_;
    std::map<std::pair<HostId, HostId>, std::size_t> index_;
    std::vector<Connection> conns_;
};

}  // namespace strack::roce
