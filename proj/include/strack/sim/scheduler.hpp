#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "strack/sim/time.hpp"

namespace strack::sim {

class Scheduler;

/// Anything that receives events. Component ids are handed out in
/// construction order so the dispatch log is identical across runs.
class EventTarget {
public:
    explicit EventTarget(Scheduler& scheduler);
    EventTarget(const EventTarget&) = delete;
    EventTarget& operator=(const EventTarget&) = delete;
    virtual ~EventTarget() = default;

    virtual void on_event(std::uint32_t kind, std::uint64_t arg) = 0;

    std::uint64_t component_id() const { return component_id_; }
    Scheduler& scheduler() const { return *scheduler_; }

private:
    Scheduler* scheduler_;
    std::uint64_t component_id_;
};

struct EventHandle {
    std::uint64_t seq = 0;
};

struct Event {
    SimTime fire_at;
    std::uint64_t seq = 0;
    EventTarget* target = nullptr;
    std::uint32_t kind = 0;
    std::uint64_t arg = 0;
};

/// Binary-heap event queue with insertion-order tie-break.
class Scheduler {
public:
    Scheduler() = default;
    Scheduler(const Scheduler&) = delete;
    Scheduler& operator=(const Scheduler&) = delete;

    SimTime now() const { return now_; }

    /// Throws std::logic_error when `at` lies in the past.
    EventHandle schedule(SimTime at, EventTarget& target, std::uint32_t kind, std::uint64_t arg = 0);
    EventHandle schedule_in(SimTime delay, EventTarget& target, std::uint32_t kind, std::uint64_t arg = 0) {
        return schedule(now_ + delay, target, kind, arg);
    }

    /// Returns false when the event was already dispatched or cancelled.
    bool cancel(EventHandle handle);

    /// Dispatches every event with fire_at <= t, including ones scheduled
    /// while draining, then sets the clock to t.
    std::uint64_t run_until(SimTime t);

    /// Dispatches until the queue is empty or stop() is called.
    std::uint64_t run();

    void stop() { stop_requested_ = true; }
    bool stopped() const { return stop_requested_; }

    bool empty() const { return heap_.size() == cancelled_.size(); }
    std::size_t pending() const { return heap_.size() - cancelled_.size(); }
    std::uint64_t dispatched() const { return dispatched_; }

    /// FNV-1a over (fire_at, seq, component id, kind, arg) of every dispatch.
    std::uint64_t dispatch_hash() const { return hash_; }

    std::uint64_t next_component_id() { return next_component_id_++; }

private:
    bool pop_next(Event& out);
    void dispatch(const Event& ev);

    SimTime now_;
    std::vector<Event> heap_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t dispatched_ = 0;
    std::uint64_t next_component_id_ = 0;
    std::uint64_t hash_ = 1469598103934665603ULL;
    bool stop_requested_ = false;
};

}  // namespace strack::sim
