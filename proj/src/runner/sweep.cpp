#include "strack/runner/sweep.hpp"

#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "strack/runner/config.hpp"
#include "strack/runner/experiment.hpp"
#include "strack/telemetry/csv.hpp"

namespace strack::runner {

using nlohmann::json;

SweepAxis parse_axis(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw ConfigError("axis '" + text + "': expected key=value1,value2,...");
    }
    SweepAxis a;
    a.key = text.substr(0, eq);
    std::stringstream ss(text.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            throw ConfigError("axis '" + text + "': empty value");
        }
        json v = json::parse(item, nullptr, false);
        a.values.push_back(v.is_discarded() ? json(item) : v);
    }
    return a;
}

namespace {

void set_path(json& j, const std::string& dotted, const json& value) {
    json* cur = &j;
    std::stringstream ss(dotted);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        parts.push_back(part);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        cur = &(*cur)[parts[i]];
        if (!cur->is_object() && !cur->is_null()) {
            throw ConfigError("axis key '" + dotted + "': '" + parts[i] + "' is not an object");
        }
    }
    (*cur)[parts.back()] = value;
}

std::string value_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::vector<SweepPoint> expand_sweep(const json& base, const std::vector<SweepAxis>& axes) {
    std::vector<SweepPoint> points{{"", base}};
    for (const auto& axis : axes) {
        std::vector<SweepPoint> next;
        for (const auto& p : points) {
            for (const auto& v : axis.values) {
                SweepPoint q = p;
                set_path(q.config, axis.key, v);
                q.name += (q.name.empty() ? "" : "_") + axis.key + "=" + value_label(v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

std::vector<SweepResult> run_sweep(const json& base, const std::vector<SweepAxis>& axes,
                                   const std::filesystem::path& out_root, unsigned jobs) {
    const auto points = expand_sweep(base, axes);
    std::vector<SweepResult> results(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            SweepResult& r = results[i];
            r.name = points[i].name;
            try {
                RunConfig cfg = parse_config(points[i].config);
                cfg.output_dir = (out_root / r.name).string();
                r.summary = run_config(cfg, cfg.output_dir).to_json();
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    jobs = std::max(1U, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < jobs; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }

    std::filesystem::create_directories(out_root);
    std::vector<std::string> header{"schema_version", "point"};
    for (const auto& a : axes) {
        header.push_back(a.key);
    }
    for (const char* h : {"status", "transport", "messages", "completed", "max_fct_us", "p99_fct_us", "mean_fct_us",
                          "max_cct_us", "min_cct_us", "data_bytes_dropped", "retransmitted_bytes", "error"}) {
        header.emplace_back(h);
    }
    telemetry::CsvWriter w(out_root / "aggregate.csv", header);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& r = results[i];
        w.field(static_cast<std::uint64_t>(telemetry::kSchemaVersion)).field(r.name);
        // recover each axis value from the point's config
        for (const auto& a : axes) {
            const json* cur = &points[i].config;
            std::stringstream ss(a.key);
            std::string part;
            while (std::getline(ss, part, '.')) {
                cur = &cur->at(part);
            }
            w.field(value_label(*cur));
        }
        w.field(std::string(r.ok ? "ok" : "failed"));
        if (r.ok) {
            const auto& s = r.summary;
            w.field(s["transport"].get<std::string>())
                .field(s["messages"].get<std::uint64_t>())
                .field(s["completed"].get<std::uint64_t>())
                .field(s["max_fct_us"].get<double>())
                .field(s["p99_fct_us"].get<double>())
                .field(s["mean_fct_us"].get<double>())
                .field(s["max_cct_us"].get<double>())
                .field(s["min_cct_us"].get<double>())
                .field(s["ledger"]["data_bytes_dropped"].get<std::uint64_t>())
                .field(s["transport_stats"]["retransmitted_bytes"].get<std::uint64_t>())
                .field(std::string());
        } else {
            for (int k = 0; k < 10; ++k) {
                w.field(std::string());
            }
            w.field(r.error);
        }
        w.end_row();
    }
    w.close();
    return results;
}

}  // namespace strack::runner
