#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strack/net/network.hpp"
#include "strack/roce/roce.hpp"
#include "strack/telemetry/collector.hpp"
#include "strack/transport/params.hpp"
#include "strack/workload/trace.hpp"

namespace strack::runner {

using net::ConfigError;
using sim::SimTime;

enum class TransportKind : std::uint8_t { Strack, StrackOblivious, Rocev2 };

TransportKind parse_transport(const std::string& s);
std::string to_string(TransportKind t);

/// "16MB", "128KB", "4KiB", "1500", or a JSON integer. KB/MB/GB are decimal,
/// KiB/MiB/GiB binary.
std::uint64_t parse_size(const nlohmann::json& v, const std::string& key);

struct TopologyConfig {
    std::uint32_t hosts = 32;
    std::uint32_t hosts_per_tor = 16;
    std::uint32_t spines = 16;
    double host_link_gbps = 400;
    std::uint32_t oversub = 1;
    double net_base_rtt_us = 8;
    std::uint32_t mtu = 4096;
    std::uint32_t control_bytes = 64;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> failed_links;
    std::uint32_t failed_uplinks_per_tor = 0;  ///< extra random failures, drawn from the seed
};

enum class WorkloadType : std::uint8_t { Permutation, Incast, Collective, Trace };

struct WorkloadConfig {
    WorkloadType type = WorkloadType::Permutation;
    std::uint64_t msg_size = 1000000;
    // incast
    std::uint32_t fanin = 8;
    std::uint32_t dst = 0;
    bool spread_tors = true;
    // collective
    workload::CollectiveAlgo algo = workload::CollectiveAlgo::Ring;
    std::uint32_t jobs = 1;
    std::uint32_t ranks = 2;
    std::uint64_t collective_bytes = 1000000;
    std::uint64_t chunk_bytes = 128 * 1000;
    std::uint32_t parallel_degree = 1;
    // trace
    std::string path;
};

struct LinkFailure {
    std::uint32_t tor = 0;
    std::uint32_t spine = 0;
    double at_us = 0;
};

struct RunConfig {
    std::uint64_t seed = 1;
    TransportKind transport = TransportKind::Strack;
    std::uint32_t qps_per_conn = 1;
    TopologyConfig topology;
    std::string fabric_mode = "auto";
    net::FabricConfig fabric;  ///< resolved from fabric_mode and overrides
    transport::CcParams cc;    ///< derived from the topology, then overridden
    roce::RoceParams roce;
    WorkloadConfig workload;
    std::vector<net::LinkImpairment> link_drops;
    std::vector<LinkFailure> link_failures;
    telemetry::TelemetryConfig telemetry;
    std::string output_dir = "out/run";
    double stop_at_us = 1e6;

    net::TopologySpec topology_spec() const;
};

/// Parses and validates. Unknown keys and bad values raise ConfigError
/// naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Every field with defaults resolved; parse_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& c);

/// Checks cross-field constraints (topology, workload fits the hosts, ...).
void validate(const RunConfig& c);

/// Resolves a relative output directory against STRACK_SIM_OUTPUT_ROOT when
/// that variable is set.
std::filesystem::path resolve_output_dir(const std::string& dir);

}  // namespace strack::runner
