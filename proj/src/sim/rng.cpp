#include "strack/sim/rng.hpp"

#include <stdexcept>

namespace strack::sim {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_id(std::string_view name, std::uint64_t index) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return splitmix64(h ^ splitmix64(index));
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(splitmix64(splitmix64(seed) ^ stream)) {}

double RngStream::uniform(double lo, double hi) {
    if (!(lo < hi)) {
        throw std::invalid_argument("uniform requires lo < hi");
    }
    const double v = lo + (hi - lo) * uniform01();
    // Rounding can land exactly on hi when the interval is tiny.
    return v < hi ? v : lo;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) {
        throw std::invalid_argument("uniform_index requires n > 0");
    }
    // Rejection sampling keeps the draw unbiased for any n.
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t v = engine_();
    while (v >= limit) {
        v = engine_();
    }
    return v % n;
}

}  // namespace strack::sim
