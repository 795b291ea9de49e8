#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "strack/net/packet.hpp"
#include "strack/transport/params.hpp"

namespace strack::transport {

using net::Entropy;
using net::Psn;
using net::SackPayload;

// ------------------------------------------------------------------ paths

/// Per-flow entropy state. A set bit means the entropy came back ECN-marked
/// and should be avoided.
struct PathState {
    explicit PathState(std::uint32_t max_paths = 256) : ecn_bitmap(max_paths, false) {}

    std::vector<bool> ecn_bitmap;
    std::uint32_t rr = 0;
    std::optional<Entropy> next_path;
};

/// clamp(floor(2 * cwnd / mtu), 8, max_paths)
std::uint32_t path_window(double cwnd, std::uint32_t mtu, std::uint32_t max_paths);

/// Entropy for the next DATA packet. With `oblivious` the bitmap and the
/// echoed entropy are ignored and the result is plain round robin.
Entropy choose_path(PathState& ps, double cwnd, std::uint32_t mtu, bool oblivious = false);

void update_ecn_bitmap(PathState& ps, bool ecn, Entropy path);

// ------------------------------------------------------------------ window

enum class CwndBranch : std::uint8_t {
    None,
    FastIncrease,    ///< !ecn, delay above target_qhigh
    DelayIncrease,   ///< !ecn, delay below target_qdelay
    AchievedBdp,     ///< cwnd set to achievedBDP
    Multiplicative,  ///< gamma-scaled decrease
};

struct CwndUpdate {
    CwndBranch branch = CwndBranch::None;
    bool fairness = false;
};

struct CcState {
    double cwnd = 0.0;       ///< bytes
    double avg_delay = 0.0;  ///< picoseconds
    SimTime base_rtt = SimTime::infinite();
    SimTime last_decrease_ts;
    SimTime last_selfai_ts;
};

CwndUpdate adjust_cwnd(CcState& s, const CcParams& p, bool ecn, SimTime delay, std::uint64_t achieved_bdp,
                       std::uint64_t acked_bytes, SimTime now);

struct AchievedBdpState {
    std::uint64_t rx_count = 0;
    std::uint64_t achieved = 0;
    SimTime rxcount_clear_ts;
};

/// Bytes acknowledged over the last base_rtt + target_qdelay window. Probe
/// replies never count.
std::uint64_t update_achieved_bdp(AchievedBdpState& s, bool for_probe, std::uint64_t acked_bytes, SimTime now,
                                  SimTime base_rtt, SimTime target_qdelay);

/// max(ceil(cwnd / mtu), min_threshold)
std::uint32_t ooo_threshold(double cwnd, std::uint32_t mtu, std::uint32_t min_threshold);

// ------------------------------------------------------------------ receiver

/// Arrival window anchored at epsn, stored as a ring of `window` bits.
struct ReceiverState {
    explicit ReceiverState(std::uint32_t window = 1024) : bits(window, false) {}

    bool received(Psn psn) const;
    std::uint32_t window() const { return static_cast<std::uint32_t>(bits.size()); }

    Psn epsn = 0;
    std::vector<bool> bits;
    std::optional<Psn> lpsn;
    std::uint32_t ooo_counter = 0;
    std::uint64_t bytes_recvd = 0;
    std::uint64_t coalesce_accum = 0;
    std::uint64_t window_overflows = 0;
};

struct RxOutcome {
    bool duplicate = false;
    bool overflow = false;
    bool sack_due = false;
};

RxOutcome receiver_on_data(ReceiverState& r, Psn psn, std::uint32_t size, std::uint32_t coalesce_bytes);

struct SackEcho {
    Entropy entropy = 0;
    bool ecn = false;
    SimTime tx_timestamp;
};

/// Builds a SACK and resets the coalescing state. `probe_base` selects the
/// segment explicitly (probe replies); otherwise the 64-aligned segment
/// holding the lowest PSN seen since the previous SACK is reported.
SackPayload build_sack(ReceiverState& r, const SackEcho& echo, std::optional<Psn> probe_base = std::nullopt);

}  // namespace strack::transport
