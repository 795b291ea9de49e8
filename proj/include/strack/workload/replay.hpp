#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "strack/sim/scheduler.hpp"
#include "strack/transport/transport.hpp"
#include "strack/workload/trace.hpp"

namespace strack::workload {

using sim::SimTime;

struct MessageTiming {
    MessageRecord record;
    SimTime release = SimTime::infinite();
    SimTime first_send = SimTime::infinite();
    SimTime delivered = SimTime::infinite();
    SimTime completed = SimTime::infinite();

    bool done() const { return !completed.is_infinite(); }
    SimTime fct() const { return completed - release; }
};

struct JobTiming {
    std::uint32_t job = 0;
    std::size_t messages = 0;
    SimTime first_send = SimTime::infinite();
    SimTime last_completion;

    SimTime cct() const { return last_completion - first_send; }
};

/// Drives a trace through a transport. A message is released once every
/// dependency has been fully delivered at its receiver.
class Replayer : public transport::TransportListener, public sim::EventTarget {
public:
    Replayer(sim::Scheduler& sched, transport::Transport& transport, Trace trace);

    /// Releases every message without dependencies at the current time.
    void start();
    bool finished() const { return completed_ == timings_.size(); }
    /// Throws std::runtime_error describing stuck messages when unfinished.
    void check_complete() const;

    void set_on_finished(std::function<void()> cb) { on_finished_ = std::move(cb); }
    void set_forward(transport::TransportListener* l) { forward_ = l; }

    const std::vector<MessageTiming>& timings() const { return timings_; }
    std::vector<JobTiming> jobs() const;
    std::size_t completed() const { return completed_; }

    void on_message_started(net::MsgId id, SimTime t) override;
    void on_message_delivered(net::MsgId id, SimTime t) override;
    void on_message_completed(net::MsgId id, SimTime t) override;
    void on_bytes_delivered(net::MsgId id, std::uint64_t bytes, SimTime t) override;
    void on_event(std::uint32_t kind, std::uint64_t arg) override;

private:
    void release(std::size_t idx);

    transport::Transport& transport_;
    std::vector<MessageTiming> timings_;
    std::unordered_map<net::MsgId, std::size_t> index_;
    std::vector<std::uint32_t> waiting_on_;
    std::vector<std::vector<std::size_t>> dependents_;
    std::size_t completed_ = 0;
    std::function<void()> on_finished_;
    transport::TransportListener* forward_ = nullptr;
};

}  // namespace strack::workload
