#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "strack/runner/config.hpp"
#include "strack/runner/experiment.hpp"
#include "strack/runner/sweep.hpp"

using namespace strack;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw net::ConfigError("cannot read config file " + path);
    }
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw net::ConfigError(path + ": " + e.what());
    }
}

void print_summary(const runner::RunSummary& s, const std::string& dir, double wall_s) {
    std::printf("transport=%s messages=%zu completed=%zu\n", s.transport.c_str(), s.messages, s.completed);
    std::printf("max_fct_us=%.3f p99_fct_us=%.3f mean_fct_us=%.3f\n", s.max_fct_us, s.p99_fct_us, s.mean_fct_us);
    if (s.max_cct_us > 0) {
        std::printf("max_cct_us=%.3f min_cct_us=%.3f\n", s.max_cct_us, s.min_cct_us);
    }
    std::printf("drops=%llu retransmitted_bytes=%llu pfc_pauses=%llu ledger=%s\n",
                static_cast<unsigned long long>(s.counters.data_packets_dropped),
                static_cast<unsigned long long>(s.stats.retransmitted_bytes),
                static_cast<unsigned long long>(s.counters.pfc_pauses), s.ledger_balanced ? "balanced" : "UNBALANCED");
    std::printf("sim_time_us=%.3f events=%llu wall_s=%.2f output=%s\n", s.end_time_us,
                static_cast<unsigned long long>(s.events), wall_s, dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Packet-level simulator for STrack and RoCEv2 on 2-tier fat trees"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "Run one simulation");
    run->add_option("config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--output", output, "Output directory (overrides output_dir)");
    run->add_option("--seed", seed, "Override the seed")->each([&](const std::string&) { seed_set = true; });

    std::vector<std::string> axes;
    unsigned jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("config", config_path, "Base JSON run config")->required()->check(CLI::ExistingFile);
    sweep->add_option("--axis", axes, "key=v1,v2,... (repeatable; cartesian product)")->required();
    sweep->add_option("-j,--jobs", jobs, "Points run in parallel")->check(CLI::PositiveNumber);
    sweep->add_option("-o,--output", output, "Output root (default: output_dir)");

    auto* val = app.add_subcommand("validate", "Validate a config and print the effective config");
    val->add_option("config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            json j = read_json(config_path);
            if (seed_set) {
                j["seed"] = seed;
            }
            auto cfg = runner::parse_config(j);
            if (!output.empty()) {
                cfg.output_dir = output;
            }
            const auto dir = runner::resolve_output_dir(cfg.output_dir);
            const auto t0 = std::chrono::steady_clock::now();
            const auto s = runner::run_config(cfg, dir);
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            print_summary(s, dir.string(), wall);
            return s.ledger_balanced ? 0 : 3;
        }
        if (sweep->parsed()) {
            const json base = read_json(config_path);
            auto cfg = runner::parse_config(base);
            std::vector<runner::SweepAxis> parsed;
            for (const auto& a : axes) {
                parsed.push_back(runner::parse_axis(a));
            }
            const auto root = runner::resolve_output_dir(output.empty() ? cfg.output_dir : output);
            const auto results = runner::run_sweep(base, parsed, root, jobs);
            int failed = 0;
            for (const auto& r : results) {
                if (r.ok) {
                    std::printf("%-40s max_fct_us=%.3f max_cct_us=%.3f\n", r.name.c_str(),
                                r.summary["max_fct_us"].get<double>(), r.summary["max_cct_us"].get<double>());
                } else {
                    ++failed;
                    std::printf("%-40s FAILED: %s\n", r.name.c_str(), r.error.c_str());
                }
            }
            std::printf("aggregate: %s\n", (root / "aggregate.csv").string().c_str());
            return failed == 0 ? 0 : 4;
        }
        if (val->parsed()) {
            const auto cfg = runner::load_config(config_path);
            std::cout << runner::to_json(cfg).dump(2) << '\n';
            return 0;
        }
    } catch (const net::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
