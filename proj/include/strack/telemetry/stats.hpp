#pragma once

#include <cstdint>
#include <vector>

namespace strack::telemetry {

/// Nearest-rank percentile, q in (0, 1]. Throws on empty input.
double percentile(std::vector<double> values, double q);

/// Jain's fairness index: (sum x)^2 / (n * sum x^2). 1 for an empty or
/// all-zero set.
double jain_index(const std::vector<double>& values);

struct FctBucket {
    std::uint64_t bytes = 0;
    std::size_t count = 0;
    double max = 0.0;
    double p99 = 0.0;
    double mean = 0.0;
};

struct FctPoint {
    std::uint64_t bytes = 0;
    double fct = 0.0;
};

/// Max, nearest-rank p99 and mean FCT per distinct message size, ordered by
/// size.
std::vector<FctBucket> summarize(const std::vector<FctPoint>& rows);

}  // namespace strack::telemetry
