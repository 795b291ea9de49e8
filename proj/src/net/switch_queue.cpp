#include "strack/net/switch_queue.hpp"

namespace strack::net {

double ecn_mark_probability(std::uint64_t queue_behind, std::uint64_t kmin, std::uint64_t kmax) {
    if (queue_behind <= kmin) {
        return 0.0;
    }
    if (queue_behind >= kmax) {
        return 1.0;
    }
    return static_cast<double>(queue_behind - kmin) / static_cast<double>(kmax - kmin);
}

EnqueueOutcome SwitchQueue::enqueue(Packet&& pkt) {
    if (is_control(pkt.kind)) {
        control_.push_back(std::move(pkt));
        return EnqueueOutcome::Accepted;
    }
    if (limits_.mode == BufferMode::Lossy && is_droppable(pkt.kind) &&
        occupancy_ + pkt.size_bytes > limits_.capacity_bytes) {
        return EnqueueOutcome::Dropped;
    }
    occupancy_ += pkt.size_bytes;
    if (pkt.kind == PacketKind::Data) {
        payload_ += pkt.size_bytes;
    }
    data_.push_back(std::move(pkt));
    return EnqueueOutcome::Accepted;
}

std::optional<Packet> SwitchQueue::dequeue_and_mark(sim::RngStream& rng, bool data_allowed) {
    if (!control_.empty()) {
        Packet p = std::move(control_.front());
        control_.pop_front();
        return p;
    }
    if (!data_allowed || data_.empty()) {
        return std::nullopt;
    }
    Packet p = std::move(data_.front());
    data_.pop_front();
    occupancy_ -= p.size_bytes;
    if (p.kind == PacketKind::Data) {
        payload_ -= p.size_bytes;
    }
    if (is_markable(p.kind)) {
        const double prob = ecn_mark_probability(occupancy_, limits_.kmin_bytes, limits_.kmax_bytes);
        if (prob >= 1.0 || (prob > 0.0 && rng.bernoulli(prob))) {
            p.ecn_ce = true;
        }
    }
    return p;
}

std::deque<Packet> SwitchQueue::drain() {
    std::deque<Packet> out = std::move(control_);
    for (auto& p : data_) {
        out.push_back(std::move(p));
    }
    control_.clear();
    data_.clear();
    occupancy_ = 0;
    payload_ = 0;
    return out;
}

}  // namespace strack::net
