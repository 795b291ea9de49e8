#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "strack/net/network.hpp"
#include "strack/runner/config.hpp"
#include "strack/telemetry/collector.hpp"
#include "strack/telemetry/stats.hpp"
#include "strack/transport/transport.hpp"
#include "strack/workload/replay.hpp"

namespace strack::runner {

struct RunSummary {
    std::string transport;
    std::size_t messages = 0;
    std::size_t completed = 0;
    double max_fct_us = 0;
    double p99_fct_us = 0;
    double mean_fct_us = 0;
    double max_cct_us = 0;
    double min_cct_us = 0;
    double end_time_us = 0;
    std::uint64_t events = 0;
    std::uint64_t dispatch_hash = 0;
    net::NetCounters counters;
    std::uint64_t data_bytes_in_flight = 0;
    bool ledger_balanced = false;
    transport::TransportStats stats;

    nlohmann::json to_json() const;
};

/// One simulation: topology, transport, workload and telemetry wired
/// together from a RunConfig.
class Experiment {
public:
    explicit Experiment(RunConfig cfg);
    ~Experiment();
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    /// Runs until every message completes or stop_at_us. Throws
    /// std::runtime_error when the trace cannot finish.
    void run();

    RunSummary summary() const;
    /// fct.csv, cct.csv, qdelay.csv, tput.csv, events.csv, fct_summary.csv,
    /// summary.json and the effective config.json.
    void write_outputs(const std::filesystem::path& dir) const;

    const RunConfig& config() const { return cfg_; }
    sim::Scheduler& scheduler() { return sched_; }
    net::Network& network() { return *net_; }
    transport::Transport& transport() { return *transport_; }
    const workload::Replayer& replayer() const { return *replayer_; }
    telemetry::Collector& collector() { return *collector_; }
    const workload::Trace& trace() const { return trace_; }

    std::vector<telemetry::FctPoint> fct_points() const;

private:
    class FailureTimer;

    workload::Trace build_trace();

    RunConfig cfg_;
    sim::Scheduler sched_;
    std::unique_ptr<net::Network> net_;
    std::unique_ptr<transport::Transport> transport_;
    workload::Trace trace_;
    std::unique_ptr<telemetry::Collector> collector_;
    std::unique_ptr<workload::Replayer> replayer_;
    std::unique_ptr<FailureTimer> failures_;
    bool ran_ = false;
};

/// Loads, runs and writes one configuration; returns its summary.
RunSummary run_config(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace strack::runner
