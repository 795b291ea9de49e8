#include "strack/sim/time.hpp"

#include <cmath>
#include <cstdio>

namespace strack::sim {

SimTime from_us(double us) {
    return SimTime::from_ps(static_cast<std::int64_t>(std::llround(us * 1e6)));
}

SimTime serialization_time(std::uint64_t bytes, LinkRate rate) {
    const unsigned __int128 bits_ps = static_cast<unsigned __int128>(bytes) * 8U * 1000000000000ULL;
    return SimTime::from_ps(static_cast<std::int64_t>(bits_ps / static_cast<std::uint64_t>(rate.bps)));
}

std::uint64_t bytes_in(SimTime t, LinkRate rate) {
    const unsigned __int128 num = static_cast<unsigned __int128>(t.ps()) * static_cast<std::uint64_t>(rate.bps);
    return static_cast<std::uint64_t>(num / (8ULL * 1000000000000ULL));
}

std::string to_string(SimTime t) {
    if (t.is_infinite()) {
        return "inf";
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3fus", t.us());
    return buf;
}

}  // namespace strack::sim
