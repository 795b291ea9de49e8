#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace strack::sim {

/// Stable 64-bit id for a named consumer, e.g. stream_id("ecn", queue_index).
std::uint64_t stream_id(std::string_view name, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded random stream. The engine is std::mt19937_64, whose output is fixed
/// by the standard; the distributions below are hand-written because the
/// standard library ones are implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi). Requires lo < hi.
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace strack::sim
