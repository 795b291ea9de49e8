#include "strack/sim/scheduler.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace strack::sim {

namespace {

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        if (a.fire_at != b.fire_at) {
            return a.fire_at > b.fire_at;
        }
        return a.seq > b.seq;
    }
};

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= 1099511628211ULL;
    }
}

}  // namespace

EventTarget::EventTarget(Scheduler& scheduler)
    : scheduler_(&scheduler), component_id_(scheduler.next_component_id()) {}

EventHandle Scheduler::schedule(SimTime at, EventTarget& target, std::uint32_t kind, std::uint64_t arg) {
    if (at < now_) {
        throw std::logic_error("event scheduled in the past: at=" + to_string(at) + " now=" + to_string(now_));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Event{at, seq, &target, kind, arg});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return EventHandle{seq};
}

bool Scheduler::cancel(EventHandle handle) {
    if (cancelled_.contains(handle.seq)) {
        return false;
    }
    const bool pending = std::any_of(heap_.begin(), heap_.end(),
                                     [&](const Event& e) { return e.seq == handle.seq; });
    if (!pending) {
        return false;
    }
    cancelled_.insert(handle.seq);
    return true;
}

bool Scheduler::pop_next(Event& out) {
    while (!heap_.empty()) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        out = heap_.back();
        heap_.pop_back();
        if (!cancelled_.empty() && cancelled_.erase(out.seq) > 0) {
            continue;
        }
        return true;
    }
    return false;
}

void Scheduler::dispatch(const Event& ev) {
    now_ = ev.fire_at;
    fnv_mix(hash_, static_cast<std::uint64_t>(ev.fire_at.ps()));
    fnv_mix(hash_, ev.seq);
    fnv_mix(hash_, ev.target->component_id());
    fnv_mix(hash_, ev.kind);
    fnv_mix(hash_, ev.arg);
    ++dispatched_;
    ev.target->on_event(ev.kind, ev.arg);
}

std::uint64_t Scheduler::run_until(SimTime t) {
    if (t < now_) {
        throw std::logic_error("run_until into the past");
    }
    std::uint64_t count = 0;
    stop_requested_ = false;
    while (!heap_.empty() && !stop_requested_) {
        // Peek: the heap front is the earliest (possibly cancelled) event.
        if (heap_.front().fire_at > t) {
            break;
        }
        Event ev;
        if (!pop_next(ev)) {
            break;
        }
        if (ev.fire_at > t) {
            // A cancelled front was skipped and the next live one is later.
            heap_.push_back(ev);
            std::push_heap(heap_.begin(), heap_.end(), Later{});
            break;
        }
        dispatch(ev);
        ++count;
    }
    if (!stop_requested_) {
        now_ = t;
    }
    return count;
}

std::uint64_t Scheduler::run() {
    std::uint64_t count = 0;
    stop_requested_ = false;
    Event ev;
    while (!stop_requested_ && pop_next(ev)) {
        dispatch(ev);
        ++count;
    }
    return count;
}

}  // namespace strack::sim
