#include "strack/runner/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "strack/roce/roce.hpp"
#include "strack/telemetry/csv.hpp"
#include "strack/transport/strack.hpp"

namespace strack::runner {

using nlohmann::json;
using telemetry::CsvWriter;
using telemetry::kSchemaVersion;

/// Applies mid-run link failures.
class Experiment::FailureTimer : public sim::EventTarget {
public:
    FailureTimer(sim::Scheduler& s, net::Network& net, std::vector<LinkFailure> failures)
        : sim::EventTarget(s), net_(net), failures_(std::move(failures)) {}

    void arm() {
        for (std::size_t i = 0; i < failures_.size(); ++i) {
            scheduler().schedule(sim::from_us(failures_[i].at_us), *this, 0, i);
        }
    }

    void on_event(std::uint32_t, std::uint64_t i) override {
        net_.fail_link(failures_[i].tor, failures_[i].spine);
    }

private:
    net::Network& net_;
    std::vector<LinkFailure> failures_;
};

Experiment::Experiment(RunConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    net_ = std::make_unique<net::Network>(sched_, cfg_.topology_spec(), cfg_.fabric, cfg_.seed);
    for (const auto& imp : cfg_.link_drops) {
        net_->add_impairment(imp, cfg_.seed);
    }
    std::vector<LinkFailure> later;
    for (const auto& f : cfg_.link_failures) {
        if (f.at_us <= 0) {
            net_->fail_link(f.tor, f.spine);
        } else {
            later.push_back(f);
        }
    }
    switch (cfg_.transport) {
    case TransportKind::Strack:
    case TransportKind::StrackOblivious:
        transport_ = std::make_unique<transport::StrackTransport>(*net_, cfg_.cc,
                                                                  cfg_.transport == TransportKind::StrackOblivious);
        break;
    case TransportKind::Rocev2:
        transport_ = std::make_unique<roce::RoceTransport>(*net_, cfg_.roce, cfg_.seed);
        break;
    }
    net_->set_sink(*transport_);
    trace_ = build_trace();
    collector_ = std::make_unique<telemetry::Collector>(*net_, cfg_.telemetry);
    net_->set_observer(collector_.get());
    replayer_ = std::make_unique<workload::Replayer>(sched_, *transport_, trace_);
    replayer_->set_forward(collector_.get());
    replayer_->set_on_finished([this] {
        collector_->stop();
        sched_.stop();
    });
    failures_ = std::make_unique<FailureTimer>(sched_, *net_, std::move(later));
}

Experiment::~Experiment() = default;

workload::Trace Experiment::build_trace() {
    const auto& w = cfg_.workload;
    const auto spec = net_->spec();
    switch (w.type) {
    case WorkloadType::Permutation: {
        sim::RngStream rng(cfg_.seed, sim::stream_id("permutation"));
        return workload::gen_permutation(spec.hosts, w.msg_size, rng);
    }
    case WorkloadType::Incast:
        return workload::gen_incast(w.fanin, w.dst, w.msg_size, spec, w.spread_tors);
    case WorkloadType::Collective: {
        sim::RngStream rng(cfg_.seed, sim::stream_id("placement"));
        const auto placements = workload::place_jobs(w.jobs, w.ranks, spec.hosts, rng);
        workload::Trace all;
        for (std::uint32_t j = 0; j < w.jobs; ++j) {
            workload::CollectiveSpec cs;
            cs.algo = w.algo;
            cs.ranks = w.ranks;
            cs.collective_bytes = w.collective_bytes;
            cs.chunk_bytes = w.chunk_bytes;
            cs.parallel_degree = w.parallel_degree;
            cs.placement = placements[j];
            cs.job = j;
            auto t = workload::gen_collective(cs, static_cast<net::MsgId>(all.size()));
            all.insert(all.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
        }
        return all;
    }
    case WorkloadType::Trace: {
        std::ifstream in(w.path);
        if (!in) {
            throw ConfigError("workload.path: cannot read " + w.path);
        }
        auto t = workload::read_trace(in);
        for (const auto& m : t) {
            if (m.src >= spec.hosts || m.dst >= spec.hosts) {
                throw ConfigError("workload.path: message " + std::to_string(m.id) + " names a host outside the topology");
            }
        }
        return t;
    }
    }
    return {};
}

void Experiment::run() {
    if (ran_) {
        throw std::logic_error("experiment already ran");
    }
    ran_ = true;
    failures_->arm();
    collector_->start();
    replayer_->start();
    const SimTime stop_at = sim::from_us(cfg_.stop_at_us);
    while (!replayer_->finished() && !sched_.empty() && sched_.now() < stop_at) {
        sched_.run_until(stop_at);
        if (sched_.stopped()) {
            break;
        }
    }
    if (!replayer_->finished()) {
        try {
            replayer_->check_complete();
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) +
                                     (sched_.empty() ? " (no events left: deadlock)" : " by stop_at_us"));
        }
    }
}

std::vector<telemetry::FctPoint> Experiment::fct_points() const {
    std::vector<telemetry::FctPoint> out;
    for (const auto& m : replayer_->timings()) {
        if (m.done()) {
            out.push_back({m.record.bytes, m.fct().us()});
        }
    }
    return out;
}

json RunSummary::to_json() const {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(dispatch_hash));
    return {{"schema_version", kSchemaVersion},
            {"transport", transport},
            {"messages", messages},
            {"completed", completed},
            {"max_fct_us", max_fct_us},
            {"p99_fct_us", p99_fct_us},
            {"mean_fct_us", mean_fct_us},
            {"max_cct_us", max_cct_us},
            {"min_cct_us", min_cct_us},
            {"end_time_us", end_time_us},
            {"events", events},
            {"dispatch_hash", hash},
            {"ledger",
             {{"data_bytes_injected", counters.data_bytes_injected},
              {"data_bytes_delivered", counters.data_bytes_delivered},
              {"data_bytes_dropped", counters.data_bytes_dropped},
              {"data_bytes_in_flight", data_bytes_in_flight},
              {"balanced", ledger_balanced}}},
            {"drops",
             {{"data_packets", counters.data_packets_dropped},
              {"buffer", counters.buffer_drops},
              {"injected", counters.injected_drops}}},
            {"pfc", {{"pauses", counters.pfc_pauses}, {"resumes", counters.pfc_resumes}}},
            {"transport_stats",
             {{"data_packets_sent", stats.data_packets_sent},
              {"data_bytes_sent", stats.data_bytes_sent},
              {"retransmitted_bytes", stats.retransmitted_bytes},
              {"recoveries", stats.recoveries},
              {"probe_recoveries", stats.probe_recoveries},
              {"probes_sent", stats.probes_sent},
              {"rto_fires", stats.rto_fires},
              {"window_overflows", stats.window_overflows},
              {"nacks_sent", stats.nacks_sent},
              {"cnps_sent", stats.cnps_sent}}}};
}

RunSummary Experiment::summary() const {
    RunSummary s;
    s.transport = transport_->name();
    s.messages = trace_.size();
    s.completed = replayer_->completed();
    const auto pts = fct_points();
    if (!pts.empty()) {
        double sum = 0;
        std::vector<double> v;
        for (const auto& p : pts) {
            s.max_fct_us = std::max(s.max_fct_us, p.fct);
            sum += p.fct;
            v.push_back(p.fct);
        }
        s.mean_fct_us = sum / static_cast<double>(pts.size());
        s.p99_fct_us = telemetry::percentile(v, 0.99);
    }
    bool first = true;
    for (const auto& j : replayer_->jobs()) {
        if (j.first_send.is_infinite()) {
            continue;
        }
        const double cct = j.cct().us();
        s.max_cct_us = first ? cct : std::max(s.max_cct_us, cct);
        s.min_cct_us = first ? cct : std::min(s.min_cct_us, cct);
        first = false;
    }
    s.end_time_us = sched_.now().us();
    s.events = sched_.dispatched();
    s.dispatch_hash = sched_.dispatch_hash();
    s.counters = net_->counters();
    s.data_bytes_in_flight = net_->data_bytes_in_flight();
    s.ledger_balanced = s.counters.data_bytes_injected ==
                        s.counters.data_bytes_delivered + s.counters.data_bytes_dropped + s.data_bytes_in_flight;
    s.stats = transport_->stats();
    return s;
}

namespace {

std::string us(SimTime t) { return t.is_infinite() ? std::string() : telemetry::format_fixed(t.us(), 6); }

}  // namespace

void Experiment::write_outputs(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    const auto& timings = replayer_->timings();

    // flow ids number (src, dst) pairs in trace order
    std::map<std::pair<net::HostId, net::HostId>, std::uint64_t> flows;
    for (const auto& m : timings) {
        flows.emplace(std::make_pair(m.record.src, m.record.dst), flows.size());
    }

    {
        CsvWriter w(dir / "fct.csv",
                    {"schema_version", "msg_id", "flow_id", "job_id", "src", "dst", "bytes", "release_us",
                     "first_send_us", "completion_us", "fct_us", "retransmitted_bytes", "drops"});
        for (const auto& m : timings) {
            const auto& r = m.record;
            w.field(static_cast<std::uint64_t>(kSchemaVersion))
                .field(static_cast<std::uint64_t>(r.id))
                .field(flows.at({r.src, r.dst}))
                .field(static_cast<std::uint64_t>(r.job))
                .field(static_cast<std::uint64_t>(r.src))
                .field(static_cast<std::uint64_t>(r.dst))
                .field(r.bytes)
                .field(us(m.release))
                .field(us(m.first_send))
                .field(us(m.completed))
                .field(m.done() ? us(m.fct()) : std::string())
                .field(transport_->progress(r.id).retransmitted)
                .field(collector_->drops_for(r.id));
            w.end_row();
        }
        w.close();
    }
    {
        CsvWriter w(dir / "cct.csv",
                    {"schema_version", "job_id", "messages", "first_send_us", "last_completion_us", "cct_us"});
        for (const auto& j : replayer_->jobs()) {
            w.field(static_cast<std::uint64_t>(kSchemaVersion))
                .field(static_cast<std::uint64_t>(j.job))
                .field(static_cast<std::uint64_t>(j.messages))
                .field(us(j.first_send))
                .field(us(j.last_completion))
                .field(j.first_send.is_infinite() ? std::string() : us(j.cct()));
            w.end_row();
        }
        w.close();
    }
    {
        CsvWriter w(dir / "qdelay.csv",
                    {"schema_version", "time_us", "switch_id", "queue_id", "delay_us", "arrival_gbps"});
        for (const auto& q : collector_->qdelay()) {
            w.field(static_cast<std::uint64_t>(kSchemaVersion))
                .field(us(q.time))
                .field(static_cast<std::uint64_t>(q.switch_id))
                .field(static_cast<std::uint64_t>(q.queue_id))
                .field(us(q.delay))
                .field(q.arrival_gbps);
            w.end_row();
        }
        w.close();
    }
    {
        CsvWriter w(dir / "tput.csv",
                    {"schema_version", "msg_id", "flow_id", "src", "dst", "window_start_us", "window_us", "gbps"});
        const SimTime win = cfg_.telemetry.tput_window;
        std::map<net::MsgId, const workload::MessageTiming*> by_id;
        for (const auto& m : timings) {
            by_id.emplace(m.record.id, &m);
        }
        for (const auto& [id, bins] : collector_->delivery_bins()) {
            const auto& r = by_id.at(id)->record;
            std::size_t first = 0;
            while (first < bins.size() && bins[first] == 0) {
                ++first;
            }
            for (std::size_t b = first; b < bins.size(); ++b) {
                w.field(static_cast<std::uint64_t>(kSchemaVersion))
                    .field(static_cast<std::uint64_t>(id))
                    .field(flows.at({r.src, r.dst}))
                    .field(static_cast<std::uint64_t>(r.src))
                    .field(static_cast<std::uint64_t>(r.dst))
                    .field(us(win * static_cast<std::int64_t>(b)))
                    .field(us(win))
                    .field(static_cast<double>(bins[b]) * 8.0 / win.seconds() * 1e-9);
                w.end_row();
            }
        }
        w.close();
    }
    {
        CsvWriter w(dir / "events.csv",
                    {"schema_version", "time_us", "event", "node", "port", "packet", "flow_id", "msg_id", "psn", "sent_us"});
        for (const auto& e : collector_->events()) {
            const bool drop = e.kind == telemetry::EventKind::Drop;
            w.field(static_cast<std::uint64_t>(kSchemaVersion))
                .field(us(e.time))
                .field(telemetry::event_name(e))
                .field(e.node)
                .field(static_cast<std::uint64_t>(e.port))
                .field(std::string(net::to_string(e.packet)))
                .field(drop ? std::to_string(e.flow) : std::string())
                .field(drop ? std::to_string(e.msg) : std::string())
                .field(drop ? std::to_string(e.psn) : std::string())
                .field(drop ? us(e.sent) : std::string());
            w.end_row();
        }
        w.close();
    }
    {
        CsvWriter w(dir / "fct_summary.csv",
                    {"schema_version", "transport", "bytes", "count", "max_fct_us", "p99_fct_us", "mean_fct_us"});
        for (const auto& b : telemetry::summarize(fct_points())) {
            w.field(static_cast<std::uint64_t>(kSchemaVersion))
                .field(transport_->name())
                .field(b.bytes)
                .field(static_cast<std::uint64_t>(b.count))
                .field(b.max)
                .field(b.p99)
                .field(b.mean);
            w.end_row();
        }
        w.close();
    }
    auto write_json = [&](const std::filesystem::path& p, const json& j) {
        std::ofstream out(p, std::ios::binary);
        out << j.dump(2) << '\n';
        if (!out) {
            throw std::runtime_error("write failed for " + p.string());
        }
    };
    write_json(dir / "summary.json", summary().to_json());
    write_json(dir / "config.json", to_json(cfg_));
}

RunSummary run_config(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    Experiment e(cfg);
    e.run();
    e.write_outputs(out_dir);
    return e.summary();
}

}  // namespace strack::runner
