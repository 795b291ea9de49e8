#include "strack/transport/strack.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace strack::transport {

StrackSender::StrackSender(StrackTransport& owner, net::FlowId flow, HostId src, HostId dst,
                           const CcParams& params, bool oblivious)
    : sim::EventTarget(owner.net_.scheduler()), owner_(owner), net_(owner.net_), flow_(flow), src_(src), dst_(dst),
      p_(params), oblivious_(oblivious), paths_(params.max_paths) {
    cc_.cwnd = p_.max_cwnd;
    // the fabric's idle RTT caps the running minimum; a flow whose first
    // sample already includes queueing would otherwise never see the floor
    cc_.base_rtt = p_.net_base_rtt;
}

void StrackSender::enqueue_message(MsgId id, std::uint64_t bytes) { pending_.push_back({id, bytes}); }

std::int64_t StrackSender::inflight_bytes() const {
    return static_cast<std::int64_t>(bytes_sent_) - static_cast<std::int64_t>(bytes_recvd_) -
           static_cast<std::int64_t>(bytes_claimed_);
}

void StrackSender::arm(TimerKind kind, SimTime at) {
    SimTime& deadline = kind == kProbe ? probe_deadline_ : rto_deadline_;
    bool& pending = kind == kProbe ? probe_event_pending_ : rto_event_pending_;
    deadline = at;
    if (!pending && !at.is_infinite()) {
        pending = true;
        scheduler().schedule(at, *this, kind);
    }
}

std::optional<net::Packet> StrackSender::pull(SimTime now) {
    if (p_.bitmap_reset_rtts > 0 && !cc_.base_rtt.is_infinite() &&
        now - last_bitmap_reset_ >= cc_.base_rtt * p_.bitmap_reset_rtts) {
        std::fill(paths_.ecn_bitmap.begin(), paths_.ecn_bitmap.end(), false);
        last_bitmap_reset_ = now;
    }

    net::Packet pkt;
    if (!lost_.empty()) {
        const Psn psn = *lost_.begin();
        PsnRecord& rec = record(psn);
        if (static_cast<double>(inflight_bytes() + rec.size) > cc_.cwnd) {
            return std::nullopt;
        }
        lost_.erase(lost_.begin());
        rec.state = PsnState::Inflight;
        inflight_sum_ += rec.size;
        pkt.psn = psn;
        pkt.size_bytes = rec.size;
        pkt.msg_id = rec.msg;
        pkt.retransmit = true;
        owner_.note_retransmit(rec.msg, rec.size);
    } else {
        if (pending_.empty() || next_psn_ >= known_epsn_ + p_.window_packets) {
            return std::nullopt;
        }
        PendingMessage& m = pending_.front();
        const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(p_.mtu, m.remaining));
        if (static_cast<double>(inflight_bytes() + size) > cc_.cwnd) {
            return std::nullopt;
        }
        owner_.note_started(m.id);
        records_.push_back(PsnRecord{PsnState::Inflight, size, m.id, now, 0});
        inflight_sum_ += size;
        pkt.psn = next_psn_++;
        pkt.size_bytes = size;
        pkt.msg_id = m.id;
        m.remaining -= size;
        if (m.remaining == 0) {
            pending_.pop_front();
        }
    }
    PsnRecord& rec = record(pkt.psn);
    rec.last_tx = now;
    ++rec.tx_count;
    bytes_sent_ += pkt.size_bytes;

    pkt.entropy = choose_path(paths_, cc_.cwnd, p_.mtu, oblivious_);
    if (!oblivious_) {
        if (paths_.ecn_bitmap[pkt.entropy]) {
            throw std::logic_error("choose_path returned a marked entropy");
        }
        ++owner_.stats_.path_checks;
    }
    pkt.flow_id = flow_;
    pkt.kind = net::PacketKind::Data;
    pkt.tx_timestamp = now;
    pkt.src = src_;
    pkt.dst = dst_;
    ++owner_.stats_.data_packets_sent;
    owner_.stats_.data_bytes_sent += pkt.size_bytes;

    if (probe_deadline_.is_infinite()) {
        arm(kProbe, now + p_.net_base_rtt * p_.probe_multiplier);
    }
    if (rto_deadline_.is_infinite()) {
        arm(kRto, now + p_.rto);
    }
    return pkt;
}

void StrackSender::ack_one(Psn psn, std::uint64_t& acked) {
    if (psn < snd_una_) {
        return;
    }
    if (psn >= next_psn_) {
        throw std::runtime_error("flow " + std::to_string(flow_) + ": SACK for unsent PSN " + std::to_string(psn));
    }
    PsnRecord& rec = record(psn);
    if (rec.state == PsnState::Acked) {
        return;
    }
    if (rec.state == PsnState::Lost) {
        lost_.erase(psn);
        bytes_claimed_ -= rec.size;
    } else {
        inflight_sum_ -= rec.size;
    }
    rec.state = PsnState::Acked;
    acked += rec.size;
    bytes_recvd_ += rec.size;
    highest_acked_ = highest_acked_ ? std::max(*highest_acked_, psn) : psn;
    owner_.note_acked(rec.msg, rec.size);
}

std::uint64_t StrackSender::merge(const net::SackPayload& s) {
    if (s.epsn > next_psn_) {
        throw std::runtime_error("flow " + std::to_string(flow_) + ": SACK epsn " + std::to_string(s.epsn) +
                                 " beyond next PSN " + std::to_string(next_psn_));
    }
    std::uint64_t acked = 0;
    for (Psn psn = snd_una_; psn < s.epsn; ++psn) {
        ack_one(psn, acked);
    }
    for (std::uint32_t i = 0; i < 64; ++i) {
        if ((s.sack_bitmap >> i) & 1U) {
            ack_one(s.sack_base + i, acked);
        }
    }
    known_epsn_ = std::max(known_epsn_, s.epsn);
    while (!records_.empty() && records_.front().state == PsnState::Acked) {
        records_.pop_front();
        ++snd_una_;
    }
    return acked;
}

void StrackSender::mark_lost(Psn psn) {
    PsnRecord& rec = record(psn);
    if (rec.state != PsnState::Inflight) {
        return;
    }
    rec.state = PsnState::Lost;
    inflight_sum_ -= rec.size;
    bytes_claimed_ += rec.size;
    lost_.insert(psn);
}

void StrackSender::ooo_loss(const net::SackPayload& s) {
    if (!highest_acked_) {
        return;
    }
    const Psn high = *highest_acked_;
    const Psn from = std::max(s.epsn, snd_una_);
    if (!recovery_) {
        recovery_ = Recovery{s.epsn, high};
        ++owner_.stats_.recoveries;
        for (Psn psn = from; psn < high; ++psn) {
            mark_lost(psn);
        }
        return;
    }
    // Already recovering: only packets sent before the one that just
    // arrived are declared lost again.
    recovery_->high = std::max(recovery_->high, high);
    for (Psn psn = from; psn < high; ++psn) {
        if (record(psn).last_tx < s.echo_tx_timestamp) {
            mark_lost(psn);
        }
    }
}

void StrackSender::declare_all_lost() {
    for (Psn psn = snd_una_; psn < next_psn_; ++psn) {
        mark_lost(psn);
    }
    if (!recovery_) {
        recovery_ = Recovery{snd_una_, next_psn_ - 1};
    } else {
        recovery_->high = std::max(recovery_->high, next_psn_ - 1);
    }
}

void StrackSender::check_invariants() const {
    ++owner_.stats_.cwnd_checks;
    if (cc_.cwnd < p_.mtu || cc_.cwnd > p_.max_cwnd) {
        throw std::logic_error("cwnd out of bounds: " + std::to_string(cc_.cwnd));
    }
    const std::int64_t inflight = inflight_bytes();
    if (inflight < 0 || static_cast<std::uint64_t>(inflight) != inflight_sum_) {
        throw std::logic_error("inflight mismatch on flow " + std::to_string(flow_) + ": " +
                               std::to_string(inflight) + " vs " + std::to_string(inflight_sum_));
    }
}

void StrackSender::on_sack(const net::Packet& pkt) {
    const net::SackPayload& s = *pkt.sack;
    const SimTime now = net_.now();
    ++owner_.stats_.acks_processed;

    update_ecn_bitmap(paths_, s.echo_ecn, s.echo_entropy);

    const SimTime rtt = now - s.echo_tx_timestamp;
    cc_.base_rtt = std::min(cc_.base_rtt, rtt);
    const SimTime qdelay = rtt - cc_.base_rtt;

    const Psn old_una = snd_una_;
    const std::uint64_t acked = merge(s);
    if (!s.for_probe) {
        sack_since_probe_ = true;
        if (acked > 0) {
            last_progress_ts_ = now;
        }
    }

    if (s.for_probe && probe_outstanding_) {
        probe_outstanding_ = false;
        // achievedBDP as of now: zero once a full window has passed with no progress
        const bool stale = now - last_progress_ts_ > cc_.base_rtt + p_.target_qdelay;
        const std::uint64_t achieved = stale ? 0 : achieved_.achieved;
        if (rtt < p_.net_base_rtt * 2 && achieved == 0 && !sack_since_probe_ && outstanding()) {
            ++owner_.stats_.probe_recoveries;
            declare_all_lost();
        }
    }

    const std::uint64_t achieved =
        update_achieved_bdp(achieved_, s.for_probe, acked, now, cc_.base_rtt, p_.target_qdelay);
    adjust_cwnd(cc_, p_, s.echo_ecn, qdelay, achieved, acked, now);

    if (s.ooo_count > ooo_threshold(cc_.cwnd, p_.mtu, p_.min_ooo_threshold)) {
        ooo_loss(s);
    }
    if (recovery_ && snd_una_ > recovery_->high) {
        recovery_.reset();
    }
    check_invariants();

    if (outstanding() || has_unsent()) {
        arm(kProbe, now + p_.net_base_rtt * p_.probe_multiplier);
        if (snd_una_ > old_una) {
            arm(kRto, now + p_.rto);
        }
    } else {
        probe_deadline_ = SimTime::infinite();
        rto_deadline_ = SimTime::infinite();
    }
    if (!outstanding()) {
        rto_deadline_ = SimTime::infinite();
    }
}

void StrackSender::send_probe() {
    const SimTime now = net_.now();
    net::Packet probe;
    probe.flow_id = flow_;
    probe.kind = net::PacketKind::Probe;
    probe.size_bytes = p_.control_bytes;
    probe.psn = known_epsn_;
    probe.probe_base = known_epsn_;
    probe.entropy = choose_path(paths_, cc_.cwnd, p_.mtu, oblivious_);
    probe.tx_timestamp = now;
    probe.src = src_;
    probe.dst = dst_;
    probe_outstanding_ = true;
    sack_since_probe_ = false;
    ++owner_.stats_.probes_sent;
    net_.host(src_).send_priority(std::move(probe));
}

void StrackSender::on_event(std::uint32_t kind, std::uint64_t) {
    const SimTime now = net_.now();
    const auto timer = static_cast<TimerKind>(kind);
    SimTime& deadline = timer == kProbe ? probe_deadline_ : rto_deadline_;
    bool& pending = timer == kProbe ? probe_event_pending_ : rto_event_pending_;
    pending = false;
    if (deadline.is_infinite()) {
        return;
    }
    if (now < deadline) {
        arm(timer, deadline);
        return;
    }
    if (!outstanding()) {
        deadline = SimTime::infinite();
        return;
    }
    if (timer == kProbe) {
        send_probe();
        arm(kProbe, now + p_.net_base_rtt * p_.probe_multiplier);
        return;
    }
    ++owner_.stats_.rto_fires;
    declare_all_lost();
    arm(kRto, now + p_.rto);
    net_.host(src_).wake(*this);
}

// ---------------------------------------------------------------- transport

StrackTransport::StrackTransport(net::Network& net, CcParams params, bool oblivious)
    : Transport(net), params_(params), oblivious_(oblivious) {
    params_.validate();
}

StrackTransport::Connection& StrackTransport::connection(HostId src, HostId dst) {
    auto [it, inserted] = index_.emplace(std::make_pair(src, dst), conns_.size());
    if (inserted) {
        const auto flow = static_cast<net::FlowId>(conns_.size());
        Connection c;
        c.sender = std::make_unique<StrackSender>(*this, flow, src, dst, params_, oblivious_);
        c.receiver = std::make_unique<StrackReceiver>(params_.window_packets);
        c.src = src;
        c.dst = dst;
        conns_.push_back(std::move(c));
        connections_ = conns_.size();
    }
    return conns_[it->second];
}

StrackSender* StrackTransport::sender(HostId src, HostId dst) {
    auto it = index_.find({src, dst});
    return it == index_.end() ? nullptr : conns_[it->second].sender.get();
}

std::vector<const StrackSender*> StrackTransport::senders() const {
    std::vector<const StrackSender*> out;
    for (const auto& c : conns_) {
        out.push_back(c.sender.get());
    }
    return out;
}

void StrackTransport::submit(const MessageInfo& msg) {
    if (msg.src >= net_.host_count() || msg.dst >= net_.host_count()) {
        throw std::invalid_argument("message " + std::to_string(msg.id) + " names a host outside the topology");
    }
    register_message(msg);
    Connection& c = connection(msg.src, msg.dst);
    c.sender->enqueue_message(msg.id, msg.bytes);
    net_.host(msg.src).wake(*c.sender);
}

void StrackTransport::on_data(Connection& c, net::Packet&& pkt) {
    ReceiverState& r = c.receiver->state();
    std::optional<Psn> probe_base;
    bool sack_due = false;
    if (pkt.kind == net::PacketKind::Probe) {
        probe_base = pkt.probe_base;
        sack_due = true;
    } else {
        const RxOutcome rx = receiver_on_data(r, pkt.psn, pkt.size_bytes, params_.coalesce_bytes);
        if (rx.overflow) {
            ++stats_.window_overflows;
            return;
        }
        if (!rx.duplicate) {
            note_delivered(pkt.msg_id, pkt.size_bytes);
        }
        sack_due = rx.sack_due;
    }
    if (!sack_due) {
        return;
    }
    net::Packet ack;
    ack.flow_id = pkt.flow_id;
    ack.kind = net::PacketKind::Sack;
    ack.size_bytes = params_.control_bytes;
    ack.entropy = pkt.entropy;
    ack.src = c.dst;
    ack.dst = c.src;
    ack.psn = r.epsn;
    ack.sack = build_sack(r, SackEcho{pkt.entropy, pkt.ecn_ce, pkt.tx_timestamp}, probe_base);
    net_.host(c.dst).send_priority(std::move(ack));
}

void StrackTransport::deliver(net::Packet&& pkt, HostId) {
    if (pkt.flow_id >= conns_.size()) {
        throw std::logic_error("packet for unknown flow " + std::to_string(pkt.flow_id));
    }
    Connection& c = conns_[pkt.flow_id];
    switch (pkt.kind) {
    case net::PacketKind::Data:
    case net::PacketKind::Probe:
        on_data(c, std::move(pkt));
        break;
    case net::PacketKind::Sack:
        c.sender->on_sack(pkt);
        net_.host(c.src).wake(*c.sender);
        break;
    default:
        throw std::logic_error("unexpected packet kind for STrack");
    }
}

}  // namespace strack::transport
