#include "strack/transport/algorithms.hpp"

#include <algorithm>
#include <cmath>

namespace strack::transport {

std::uint32_t path_window(double cwnd, std::uint32_t mtu, std::uint32_t max_paths) {
    const double pkts = std::floor(2.0 * cwnd / mtu);
    const auto paths = static_cast<std::uint32_t>(std::min(pkts, static_cast<double>(max_paths)));
    return std::max<std::uint32_t>(8, std::min(paths, max_paths));
}

Entropy choose_path(PathState& ps, double cwnd, std::uint32_t mtu, bool oblivious) {
    const auto max_paths = static_cast<std::uint32_t>(ps.ecn_bitmap.size());
    if (!oblivious && ps.next_path) {
        const Entropy e = *ps.next_path;
        ps.next_path.reset();
        return e;
    }
    const std::uint32_t paths = path_window(cwnd, mtu, max_paths);
    ps.rr = (ps.rr + 1) % paths;
    if (oblivious) {
        return static_cast<Entropy>(ps.rr);
    }
    bool cleared = false;
    for (std::uint32_t i = 0; i < paths && ps.ecn_bitmap[ps.rr]; ++i) {
        // one packet only clears one bit
        if (!cleared) {
            ps.ecn_bitmap[ps.rr] = false;
            cleared = true;
        }
        ps.rr = (ps.rr + 1) % paths;
    }
    return static_cast<Entropy>(ps.rr);
}

void update_ecn_bitmap(PathState& ps, bool ecn, Entropy path) {
    if (ecn) {
        ps.ecn_bitmap[path] = true;
        ps.next_path.reset();
    } else {
        ps.ecn_bitmap[path] = false;
        ps.next_path = path;
    }
}

CwndUpdate adjust_cwnd(CcState& s, const CcParams& p, bool ecn, SimTime delay, std::uint64_t achieved_bdp,
                       std::uint64_t acked_bytes, SimTime now) {
    CwndUpdate out;
    const bool can_decrease = now - s.last_decrease_ts > s.base_rtt;
    const bool can_fairness = now - s.last_selfai_ts > s.base_rtt;
    const auto d = static_cast<double>(delay.ps());
    s.avg_delay = s.avg_delay * (1.0 - p.ewma) + p.ewma * d;

    const double acked_share = static_cast<double>(acked_bytes) / s.cwnd;
    if (!ecn && delay > p.target_qhigh) {
        s.cwnd += p.beta * acked_share;
        out.branch = CwndBranch::FastIncrease;
    } else if (!ecn && delay < p.target_qdelay) {
        s.cwnd += p.alpha * static_cast<double>((p.target_qdelay - delay).ps()) * acked_share;
        out.branch = CwndBranch::DelayIncrease;
    } else if (can_decrease && s.avg_delay > static_cast<double>(p.target_qdelay.ps())) {
        if (delay > p.target_qhigh && static_cast<double>(achieved_bdp) < p.max_cwnd / 8.0) {
            s.cwnd = static_cast<double>(achieved_bdp);
            s.last_decrease_ts = now;
            out.branch = CwndBranch::AchievedBdp;
        } else if (delay > p.target_qdelay) {
            const double target = static_cast<double>(p.target_qdelay.ps());
            s.cwnd *= std::max(1.0 - p.gamma * (s.avg_delay - target) / s.avg_delay, 0.5);
            s.last_decrease_ts = now;
            out.branch = CwndBranch::Multiplicative;
        }
    }
    if (can_fairness) {
        s.cwnd += p.eta;
        s.last_selfai_ts = now;
        out.fairness = true;
    }
    s.cwnd = std::clamp(s.cwnd, static_cast<double>(p.mtu), p.max_cwnd);
    return out;
}

std::uint64_t update_achieved_bdp(AchievedBdpState& s, bool for_probe, std::uint64_t acked_bytes, SimTime now,
                                  SimTime base_rtt, SimTime target_qdelay) {
    const bool can_clear = !base_rtt.is_infinite() && now - s.rxcount_clear_ts > base_rtt + target_qdelay;
    if (!for_probe) {
        s.rx_count += acked_bytes;
    }
    if (can_clear) {
        s.achieved = s.rx_count;
        s.rx_count = 0;
        s.rxcount_clear_ts = now;
    }
    return s.achieved;
}

std::uint32_t ooo_threshold(double cwnd, std::uint32_t mtu, std::uint32_t min_threshold) {
    const auto pkts = static_cast<std::uint32_t>(std::ceil(cwnd / mtu));
    return std::max(pkts, min_threshold);
}

bool ReceiverState::received(Psn psn) const {
    if (psn < epsn) {
        return true;
    }
    if (psn >= epsn + bits.size()) {
        return false;
    }
    return bits[psn % bits.size()];
}

RxOutcome receiver_on_data(ReceiverState& r, Psn psn, std::uint32_t size, std::uint32_t coalesce_bytes) {
    RxOutcome out;
    const std::size_t w = r.bits.size();
    if (psn >= r.epsn + w) {
        ++r.window_overflows;
        out.overflow = true;
        return out;
    }
    r.coalesce_accum += size;
    if (r.received(psn)) {
        out.duplicate = true;
        out.sack_due = r.coalesce_accum >= coalesce_bytes;
        return out;
    }
    r.bits[psn % w] = true;
    r.bytes_recvd += size;
    r.lpsn = r.lpsn ? std::min(*r.lpsn, psn) : psn;
    const bool in_order = psn == r.epsn;
    if (in_order) {
        while (r.bits[r.epsn % w]) {
            r.bits[r.epsn % w] = false;
            ++r.epsn;
        }
        r.ooo_counter = 0;
    } else {
        ++r.ooo_counter;
    }
    out.sack_due = in_order || r.coalesce_accum >= coalesce_bytes;
    return out;
}

SackPayload build_sack(ReceiverState& r, const SackEcho& echo, std::optional<Psn> probe_base) {
    SackPayload s;
    s.epsn = r.epsn;
    if (probe_base) {
        s.sack_base = std::max(*probe_base, r.epsn);
        s.for_probe = true;
    } else if (r.lpsn && *r.lpsn > r.epsn) {
        s.sack_base = r.epsn + (*r.lpsn - r.epsn) / 64 * 64;
    } else {
        s.sack_base = r.epsn;
    }
    for (std::uint32_t i = 0; i < 64; ++i) {
        if (r.received(s.sack_base + i) && s.sack_base + i >= r.epsn) {
            s.sack_bitmap |= std::uint64_t{1} << i;
        }
    }
    s.bytes_recvd = r.bytes_recvd;
    s.ooo_count = r.ooo_counter;
    s.echo_entropy = echo.entropy;
    s.echo_ecn = echo.ecn;
    s.echo_tx_timestamp = echo.tx_timestamp;
    r.lpsn.reset();
    r.coalesce_accum = 0;
    return s;
}

}  // namespace strack::transport
