#include "strack/roce/roce.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "strack/sim/rng.hpp"

namespace strack::roce {

void RoceParams::validate() const {
    if (qps_per_conn == 0 || qps_per_conn > 64) {
        throw std::invalid_argument("qps_per_conn must lie in [1, 64]");
    }
    if (mtu == 0 || control_bytes == 0 || ack_coalesce_bytes == 0) {
        throw std::invalid_argument("invalid RoCE packet sizes");
    }
    if (rto <= SimTime::zero()) {
        throw std::invalid_argument("RoCE rto must be positive");
    }
    dcqcn.validate();
}

// ---------------------------------------------------------------- sender QP

RoceQp::RoceQp(RoceTransport& owner, net::FlowId flow, std::uint16_t index, HostId src, HostId dst,
               net::Entropy entropy, LinkRate line_rate)
    : sim::EventTarget(owner.net_.scheduler()), owner_(owner), flow_(flow), index_(index), src_(src), dst_(dst),
      entropy_(entropy), dcqcn_(line_rate, owner.params_.dcqcn) {}

void RoceQp::append(MsgId msg, std::uint32_t size, bool last) { slots_.push_back({msg, size, last}); }

void RoceQp::arm_rto(SimTime at) {
    rto_deadline_ = at;
    if (!rto_pending_ && !at.is_infinite()) {
        rto_pending_ = true;
        scheduler().schedule(at, *this, kRto);
    }
}

std::optional<net::Packet> RoceQp::pull(SimTime now) {
    if (next_psn_ >= una_ + slots_.size()) {
        return std::nullopt;
    }
    if (now < next_send_) {
        if (!pace_pending_) {
            pace_pending_ = true;
            scheduler().schedule(next_send_, *this, kPace);
        }
        return std::nullopt;
    }
    dcqcn_.advance(now);
    const Slot& slot = slots_[next_psn_ - una_];
    net::Packet pkt;
    pkt.flow_id = flow_;
    pkt.psn = next_psn_;
    pkt.size_bytes = slot.size;
    pkt.kind = net::PacketKind::Data;
    pkt.entropy = entropy_;
    pkt.tx_timestamp = now;
    pkt.src = src_;
    pkt.dst = dst_;
    pkt.msg_id = slot.msg;
    pkt.qp = index_;
    pkt.last_of_msg = slot.last;
    if (next_psn_ < max_sent_) {
        pkt.retransmit = true;
        owner_.note_retransmit(slot.msg, slot.size);
    } else {
        owner_.note_started(slot.msg);
    }
    ++next_psn_;
    max_sent_ = std::max(max_sent_, next_psn_);
    ++owner_.stats_.data_packets_sent;
    owner_.stats_.data_bytes_sent += slot.size;

    const auto gap_ps = static_cast<std::int64_t>(static_cast<double>(slot.size) * 8e12 / dcqcn_.rate_bps());
    next_send_ = now + SimTime::from_ps(gap_ps);
    dcqcn_.on_bytes_sent(slot.size, now);
    if (rto_deadline_.is_infinite()) {
        arm_rto(now + owner_.params_.rto);
    }
    return pkt;
}

void RoceQp::ack_through(Psn epsn) {
    const SimTime now = owner_.net_.now();
    if (epsn > max_sent_) {
        throw std::runtime_error("RoCE ACK for unsent PSN " + std::to_string(epsn));
    }
    bool progressed = false;
    while (una_ < epsn) {
        const Slot& s = slots_.front();
        owner_.note_acked(s.msg, s.size);
        slots_.pop_front();
        ++una_;
        progressed = true;
    }
    next_psn_ = std::max(next_psn_, una_);
    if (una_ == max_sent_) {
        rto_deadline_ = SimTime::infinite();
    } else if (progressed) {
        arm_rto(now + owner_.params_.rto);
    }
}

void RoceQp::on_ack(Psn epsn) { ack_through(epsn); }

void RoceQp::on_nack(Psn epsn) {
    ack_through(epsn);
    if (next_psn_ > epsn) {
        next_psn_ = epsn;
        ++rewinds_;
    }
    owner_.net_.host(src_).wake(*this);
}

void RoceQp::on_cnp() { dcqcn_.on_cnp(owner_.net_.now()); }

void RoceQp::on_event(std::uint32_t kind, std::uint64_t) {
    const SimTime now = owner_.net_.now();
    if (kind == kPace) {
        pace_pending_ = false;
        owner_.net_.host(src_).wake(*this);
        return;
    }
    rto_pending_ = false;
    if (rto_deadline_.is_infinite()) {
        return;
    }
    if (now < rto_deadline_) {
        arm_rto(rto_deadline_);
        return;
    }
    if (una_ < max_sent_) {
        ++owner_.stats_.rto_fires;
        next_psn_ = una_;
        ++rewinds_;
        arm_rto(now + owner_.params_.rto);
        owner_.net_.host(src_).wake(*this);
    } else {
        rto_deadline_ = SimTime::infinite();
    }
}

// ---------------------------------------------------------------- transport

RoceTransport::RoceTransport(net::Network& net, RoceParams params, std::uint64_t seed)
    : Transport(net), params_(params), seed_(seed) {
    params_.validate();
}

RoceTransport::Connection& RoceTransport::connection(HostId src, HostId dst) {
    auto [it, inserted] = index_.emplace(std::make_pair(src, dst), conns_.size());
    if (inserted) {
        const auto flow = static_cast<net::FlowId>(conns_.size());
        sim::RngStream rng(seed_, sim::stream_id("qp_entropy", flow));
        Connection c;
        c.src = src;
        c.dst = dst;
        for (std::uint32_t q = 0; q < params_.qps_per_conn; ++q) {
            const auto entropy = static_cast<net::Entropy>(rng.next_u64() & 0xffffU);
            c.tx.push_back(std::make_unique<RoceQp>(*this, flow, static_cast<std::uint16_t>(q), src, dst, entropy,
                                                    net_.spec().host_link_speed));
        }
        c.rx.resize(params_.qps_per_conn);
        conns_.push_back(std::move(c));
        connections_ = conns_.size();
    }
    return conns_[it->second];
}

net::Entropy RoceTransport::qp_entropy(HostId src, HostId dst, std::uint16_t qp) {
    return connection(src, dst).tx.at(qp)->entropy();
}

std::optional<net::FlowId> RoceTransport::flow_of(HostId src, HostId dst) const {
    auto it = index_.find({src, dst});
    if (it == index_.end()) {
        return std::nullopt;
    }
    return static_cast<net::FlowId>(it->second);
}

std::vector<const RoceQp*> RoceTransport::qps() const {
    std::vector<const RoceQp*> out;
    for (const auto& c : conns_) {
        for (const auto& q : c.tx) {
            out.push_back(q.get());
        }
    }
    return out;
}

void RoceTransport::submit(const transport::MessageInfo& msg) {
    if (msg.src >= net_.host_count() || msg.dst >= net_.host_count()) {
        throw std::invalid_argument("message " + std::to_string(msg.id) + " names a host outside the topology");
    }
    register_message(msg);
    Connection& c = connection(msg.src, msg.dst);
    const std::uint64_t packets = (msg.bytes + params_.mtu - 1) / params_.mtu;
    const auto q = static_cast<std::uint64_t>(c.tx.size());
    // packet i of the message goes to queue pair i mod q
    const std::uint64_t first = c.next_stripe;
    for (std::uint64_t i = 0; i < packets; ++i) {
        const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(params_.mtu, msg.bytes - i * params_.mtu));
        const bool last = i + q >= packets;
        c.tx[(first + i) % q]->append(msg.id, size, last);
    }
    c.next_stripe = (first + packets) % q;
    for (auto& qp : c.tx) {
        net_.host(msg.src).wake(*qp);
    }
}

void RoceTransport::send_control(Connection& c, net::PacketKind kind, std::uint16_t qp, Psn psn,
                                 net::Entropy entropy) {
    net::Packet p;
    p.flow_id = static_cast<net::FlowId>(index_.at({c.src, c.dst}));
    p.kind = kind;
    p.size_bytes = params_.control_bytes;
    p.psn = psn;
    p.qp = qp;
    p.entropy = entropy;
    p.src = c.dst;
    p.dst = c.src;
    net_.host(c.dst).send_priority(std::move(p));
}

void RoceTransport::on_data(Connection& c, net::Packet&& pkt) {
    RoceRxQp& rx = c.rx.at(pkt.qp);
    const SimTime now = net_.now();
    if (pkt.ecn_ce && (!rx.last_cnp || now - *rx.last_cnp >= params_.dcqcn.cnp_interval)) {
        rx.last_cnp = now;
        ++stats_.cnps_sent;
        send_control(c, net::PacketKind::Cnp, pkt.qp, pkt.psn, pkt.entropy);
    }
    if (pkt.psn == rx.epsn) {
        ++rx.epsn;
        rx.nacked_at.reset();
        note_delivered(pkt.msg_id, pkt.size_bytes);
        rx.unacked_bytes += pkt.size_bytes;
        if (rx.unacked_bytes >= params_.ack_coalesce_bytes || pkt.last_of_msg) {
            rx.unacked_bytes = 0;
            send_control(c, net::PacketKind::Ack, pkt.qp, rx.epsn, pkt.entropy);
        }
    } else if (pkt.psn > rx.epsn) {
        if (rx.nacked_at != rx.epsn) {
            rx.nacked_at = rx.epsn;
            ++stats_.nacks_sent;
            send_control(c, net::PacketKind::Nack, pkt.qp, rx.epsn, pkt.entropy);
        }
    } else {
        send_control(c, net::PacketKind::Ack, pkt.qp, rx.epsn, pkt.entropy);
    }
}

void RoceTransport::deliver(net::Packet&& pkt, HostId) {
    if (pkt.flow_id >= conns_.size()) {
        throw std::logic_error("packet for unknown RoCE flow " + std::to_string(pkt.flow_id));
    }
    Connection& c = conns_[pkt.flow_id];
    switch (pkt.kind) {
    case net::PacketKind::Data:
        on_data(c, std::move(pkt));
        break;
    case net::PacketKind::Ack:
        c.tx.at(pkt.qp)->on_ack(pkt.psn);
        break;
    case net::PacketKind::Nack:
        c.tx.at(pkt.qp)->on_nack(pkt.psn);
        break;
    case net::PacketKind::Cnp:
        c.tx.at(pkt.qp)->on_cnp();
        break;
    default:
        throw std::logic_error("unexpected packet kind for RoCE");
    }
}

}  // namespace strack::roce
