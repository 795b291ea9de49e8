#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace strack::runner {

/// One swept parameter: a dotted key path into the config and its values.
struct SweepAxis {
    std::string key;
    std::vector<nlohmann::json> values;
};

/// Parses "workload.msg_size=4KB,128KB,2MB". Values that parse as JSON keep
/// their type; anything else is a string.
SweepAxis parse_axis(const std::string& text);

struct SweepPoint {
    std::string name;  ///< directory name, e.g. "workload.msg_size=4KB"
    nlohmann::json config;
};

/// Cartesian product of the axes applied to `base`.
std::vector<SweepPoint> expand_sweep(const nlohmann::json& base, const std::vector<SweepAxis>& axes);

struct SweepResult {
    std::string name;
    bool ok = false;
    std::string error;
    nlohmann::json summary;
};

/// Runs every point (up to `jobs` at a time) into out_root/<name> and writes
/// out_root/aggregate.csv. Failed points are reported, not fatal.
std::vector<SweepResult> run_sweep(const nlohmann::json& base, const std::vector<SweepAxis>& axes,
                                   const std::filesystem::path& out_root, unsigned jobs);

}  // namespace strack::runner
