#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace strack::sim {

/// Simulation time in integer picoseconds since the start of a run.
///
/// Picosecond resolution keeps serialization times exact for every link
/// speed that divides 8 Tbit/s (100/200/400/800 Gbps), so queue-delay sums
/// never drift.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime from_ps(std::int64_t ps) { return SimTime(ps); }
    static constexpr SimTime zero() { return SimTime(0); }
    static constexpr SimTime infinite() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

    constexpr std::int64_t ps() const { return ps_; }
    constexpr double ns() const { return static_cast<double>(ps_) * 1e-3; }
    constexpr double us() const { return static_cast<double>(ps_) * 1e-6; }
    constexpr double ms() const { return static_cast<double>(ps_) * 1e-9; }
    constexpr double seconds() const { return static_cast<double>(ps_) * 1e-12; }
    constexpr bool is_infinite() const { return ps_ == std::numeric_limits<std::int64_t>::max(); }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime operator+(SimTime o) const { return SimTime(ps_ + o.ps_); }
    constexpr SimTime operator-(SimTime o) const { return SimTime(ps_ - o.ps_); }
    constexpr SimTime& operator+=(SimTime o) { ps_ += o.ps_; return *this; }
    constexpr SimTime& operator-=(SimTime o) { ps_ -= o.ps_; return *this; }
    constexpr SimTime operator*(std::int64_t k) const { return SimTime(ps_ * k); }
    constexpr SimTime operator/(std::int64_t k) const { return SimTime(ps_ / k); }
    constexpr double operator/(SimTime o) const {
        return static_cast<double>(ps_) / static_cast<double>(o.ps_);
    }

private:
    constexpr explicit SimTime(std::int64_t ps) : ps_(ps) {}
    std::int64_t ps_ = 0;
};

constexpr SimTime picoseconds(std::int64_t v) { return SimTime::from_ps(v); }
constexpr SimTime nanoseconds(std::int64_t v) { return SimTime::from_ps(v * 1000); }
constexpr SimTime microseconds(std::int64_t v) { return SimTime::from_ps(v * 1000000); }
constexpr SimTime milliseconds(std::int64_t v) { return SimTime::from_ps(v * 1000000000); }

/// Rounds a (possibly fractional) microsecond value to the nearest picosecond.
SimTime from_us(double us);

/// Link rate in bits per second.
struct LinkRate {
    std::int64_t bps = 0;
    constexpr auto operator<=>(const LinkRate&) const = default;
    constexpr double gbps() const { return static_cast<double>(bps) * 1e-9; }
};

constexpr LinkRate gbps(std::int64_t g) { return LinkRate{g * 1000000000LL}; }

/// True when one byte serializes in a whole number of picoseconds.
constexpr bool has_exact_byte_time(LinkRate rate) {
    return rate.bps > 0 && 8000000000000LL % rate.bps == 0;
}

/// Time to put `bytes` on the wire at `rate`, truncated to a picosecond.
SimTime serialization_time(std::uint64_t bytes, LinkRate rate);

/// Bytes a link at `rate` carries in `t`.
std::uint64_t bytes_in(SimTime t, LinkRate rate);

std::string to_string(SimTime t);

}  // namespace strack::sim
