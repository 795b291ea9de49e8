#include "strack/telemetry/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace strack::telemetry {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("percentile of an empty set");
    }
    if (!(q > 0.0 && q <= 1.0)) {
        throw std::invalid_argument("percentile rank must lie in (0, 1]");
    }
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

double jain_index(const std::vector<double>& values) {
    double sum = 0.0;
    double sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
    }
    if (values.empty() || sq == 0.0) {
        return 1.0;
    }
    return sum * sum / (static_cast<double>(values.size()) * sq);
}

std::vector<FctBucket> summarize(const std::vector<FctPoint>& rows) {
    std::map<std::uint64_t, std::vector<double>> by_size;
    for (const auto& r : rows) {
        by_size[r.bytes].push_back(r.fct);
    }
    std::vector<FctBucket> out;
    for (auto& [bytes, v] : by_size) {
        FctBucket b;
        b.bytes = bytes;
        b.count = v.size();
        double sum = 0.0;
        for (double x : v) {
            sum += x;
        }
        b.mean = sum / static_cast<double>(v.size());
        b.max = *std::max_element(v.begin(), v.end());
        b.p99 = percentile(std::move(v), 0.99);
        out.push_back(b);
    }
    return out;
}

}  // namespace strack::telemetry
