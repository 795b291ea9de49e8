#include "strack/workload/replay.hpp"

#include <stdexcept>
#include <string>

namespace strack::workload {

Replayer::Replayer(sim::Scheduler& sched, transport::Transport& transport, Trace trace)
    : sim::EventTarget(sched), transport_(transport) {
    validate_trace(trace);
    timings_.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        index_.emplace(trace[i].id, i);
        timings_.push_back(MessageTiming{std::move(trace[i])});
    }
    waiting_on_.assign(timings_.size(), 0);
    dependents_.assign(timings_.size(), {});
    for (std::size_t i = 0; i < timings_.size(); ++i) {
        for (net::MsgId d : timings_[i].record.deps) {
            dependents_[index_.at(d)].push_back(i);
            ++waiting_on_[i];
        }
    }
    transport_.set_listener(this);
}

void Replayer::start() {
    for (std::size_t i = 0; i < timings_.size(); ++i) {
        if (waiting_on_[i] == 0) {
            release(i);
        }
    }
    if (finished() && on_finished_) {
        on_finished_();
    }
}

void Replayer::release(std::size_t idx) {
    MessageTiming& m = timings_[idx];
    m.release = scheduler().now();
    transport_.submit(transport::MessageInfo{m.record.id, m.record.src, m.record.dst, m.record.bytes});
}

void Replayer::on_event(std::uint32_t, std::uint64_t arg) { release(static_cast<std::size_t>(arg)); }

void Replayer::on_message_started(net::MsgId id, SimTime t) {
    timings_[index_.at(id)].first_send = t;
    if (forward_ != nullptr) {
        forward_->on_message_started(id, t);
    }
}

void Replayer::on_message_delivered(net::MsgId id, SimTime t) {
    const std::size_t idx = index_.at(id);
    timings_[idx].delivered = t;
    for (std::size_t dep : dependents_[idx]) {
        if (--waiting_on_[dep] == 0) {
            // released at the same instant, after the current event finishes
            scheduler().schedule(t, *this, 0, dep);
        }
    }
    if (forward_ != nullptr) {
        forward_->on_message_delivered(id, t);
    }
}

void Replayer::on_message_completed(net::MsgId id, SimTime t) {
    timings_[index_.at(id)].completed = t;
    ++completed_;
    if (forward_ != nullptr) {
        forward_->on_message_completed(id, t);
    }
    if (finished() && on_finished_) {
        on_finished_();
    }
}

void Replayer::on_bytes_delivered(net::MsgId id, std::uint64_t bytes, SimTime t) {
    if (forward_ != nullptr) {
        forward_->on_bytes_delivered(id, bytes, t);
    }
}

void Replayer::check_complete() const {
    if (finished()) {
        return;
    }
    std::size_t unreleased = 0;
    std::size_t stuck = 0;
    const MessageTiming* example = nullptr;
    for (std::size_t i = 0; i < timings_.size(); ++i) {
        if (timings_[i].release.is_infinite()) {
            ++unreleased;
            if (example == nullptr) {
                example = &timings_[i];
            }
        } else if (!timings_[i].done()) {
            ++stuck;
        }
    }
    std::string msg = "replay did not finish: " + std::to_string(completed_) + "/" +
                      std::to_string(timings_.size()) + " messages complete, " + std::to_string(stuck) +
                      " in progress, " + std::to_string(unreleased) + " never released";
    if (example != nullptr) {
        msg += " (e.g. message " + std::to_string(example->record.id) + " waiting on " +
               std::to_string(waiting_on_[index_.at(example->record.id)]) + " dependencies)";
    }
    throw std::runtime_error(msg);
}

std::vector<JobTiming> Replayer::jobs() const {
    std::vector<JobTiming> out;
    std::unordered_map<std::uint32_t, std::size_t> pos;
    for (const auto& m : timings_) {
        auto [it, inserted] = pos.emplace(m.record.job, out.size());
        if (inserted) {
            JobTiming j;
            j.job = m.record.job;
            out.push_back(j);
        }
        JobTiming& j = out[it->second];
        ++j.messages;
        j.first_send = std::min(j.first_send, m.first_send);
        if (m.done()) {
            j.last_completion = std::max(j.last_completion, m.completed);
        }
    }
    return out;
}

}  // namespace strack::workload
