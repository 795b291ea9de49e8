#include "strack/transport/transport.hpp"

#include <stdexcept>

namespace strack::transport {

MessageProgress& Transport::register_message(const MessageInfo& msg) {
    if (msg.bytes == 0 || msg.src == msg.dst) {
        throw std::invalid_argument("message " + std::to_string(msg.id) + " is empty or loops back");
    }
    auto [it, inserted] = messages_.emplace(msg.id, MessageProgress{msg});
    if (!inserted) {
        throw std::invalid_argument("message " + std::to_string(msg.id) + " submitted twice");
    }
    return it->second;
}

void Transport::note_started(MsgId id) {
    auto& m = messages_.at(id);
    if (!m.started) {
        m.started = true;
        if (listener_ != nullptr) {
            listener_->on_message_started(id, net_.now());
        }
    }
}

void Transport::note_delivered(MsgId id, std::uint64_t bytes) {
    auto& m = messages_.at(id);
    m.delivered += bytes;
    if (listener_ != nullptr) {
        listener_->on_bytes_delivered(id, bytes, net_.now());
    }
    if (m.delivered == m.info.bytes && listener_ != nullptr) {
        listener_->on_message_delivered(id, net_.now());
    }
}

void Transport::note_acked(MsgId id, std::uint64_t bytes) {
    auto& m = messages_.at(id);
    m.acked += bytes;
    if (m.acked == m.info.bytes && listener_ != nullptr) {
        listener_->on_message_completed(id, net_.now());
    }
}

void Transport::note_retransmit(MsgId id, std::uint64_t bytes) {
    messages_.at(id).retransmitted += bytes;
    stats_.retransmitted_bytes += bytes;
}

}  // namespace strack::transport
