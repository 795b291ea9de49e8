#include <doctest.h>

#include <cmath>
#include <memory>

#include "strack/net/network.hpp"
#include "strack/transport/algorithms.hpp"
#include "strack/transport/params.hpp"
#include "strack/transport/strack.hpp"

using namespace strack;
using namespace strack::transport;
using sim::microseconds;
using sim::SimTime;

namespace {

CcParams params400() { return CcParams::derive(sim::gbps(400), microseconds(8), 4096); }

}  // namespace

TEST_CASE("parameters derived from the deployment") {
    const CcParams p = params400();
    const double bdp_sf = 400000.0 / 150000.0;  // 400G * 8us over 100G * 12us
    const double delay_sf = 8.0 / 12.0;
    CHECK(p.bdp_sf == doctest::Approx(bdp_sf).epsilon(1e-12));
    CHECK(p.delay_sf == doctest::Approx(delay_sf).epsilon(1e-12));
    CHECK(p.beta == doctest::Approx(5 * 4096 * bdp_sf).epsilon(1e-12));
    CHECK(p.eta == doctest::Approx(0.15 * 4096 * bdp_sf).epsilon(1e-12));
    CHECK(p.alpha == doctest::Approx(4.0 * bdp_sf * delay_sf * 4096 / 8e6).epsilon(1e-12));
    CHECK(p.target_qdelay == microseconds(8));
    CHECK(p.target_qhigh == microseconds(24));
    CHECK(p.gamma == 0.8);
    CHECK(p.ewma == 0.125);
    CHECK(p.max_cwnd == 400000.0);
    CHECK(p.rto == microseconds(500));
    CHECK_NOTHROW(p.validate());
    CcParams bad = p;
    bad.gamma = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("choose_path hand traces") {
    const double cwnd = 400000;
    SUBCASE("valid next_path is returned once") {
        PathState ps;
        ps.next_path = 7;
        CHECK(choose_path(ps, cwnd, 4096) == 7);
        CHECK_FALSE(ps.next_path.has_value());
    }
    SUBCASE("clear bitmap pre-increments rr") {
        PathState ps;
        CHECK(choose_path(ps, cwnd, 4096) == 1);
        CHECK(ps.rr == 1);
    }
    SUBCASE("marked entropy is skipped and its bit cleared") {
        PathState ps;
        ps.ecn_bitmap[1] = true;
        CHECK(choose_path(ps, cwnd, 4096) == 2);
        CHECK_FALSE(ps.ecn_bitmap[1]);
    }
    SUBCASE("only the first skipped bit is cleared") {
        PathState ps;
        ps.ecn_bitmap[1] = true;
        ps.ecn_bitmap[2] = true;
        CHECK(choose_path(ps, cwnd, 4096) == 3);
        CHECK_FALSE(ps.ecn_bitmap[1]);
        CHECK(ps.ecn_bitmap[2]);
    }
    SUBCASE("fully marked window terminates") {
        PathState ps;
        for (int i = 0; i < 8; ++i) {
            ps.ecn_bitmap[i] = true;
        }
        // window of 8: clears bit 1, walks once round, lands on 1 again
        CHECK(choose_path(ps, 4096, 4096) == 1);
        int still_set = 0;
        for (int i = 0; i < 8; ++i) {
            still_set += ps.ecn_bitmap[i] ? 1 : 0;
        }
        CHECK(still_set == 7);
    }
    SUBCASE("oblivious spraying ignores marks and echoes") {
        PathState ps;
        ps.ecn_bitmap[1] = true;
        ps.next_path = 9;
        CHECK(choose_path(ps, cwnd, 4096, true) == 1);
        CHECK(choose_path(ps, cwnd, 4096, true) == 2);
    }
}

TEST_CASE("path window") {
    CHECK(path_window(400000, 4096, 256) == 195);
    CHECK(path_window(4096, 4096, 256) == 8);
    CHECK(path_window(4e6, 4096, 256) == 256);
}

TEST_CASE("ECN bitmap updates") {
    PathState ps;
    update_ecn_bitmap(ps, false, 5);
    CHECK_FALSE(ps.ecn_bitmap[5]);
    CHECK(ps.next_path == 5);
    update_ecn_bitmap(ps, true, 5);
    CHECK(ps.ecn_bitmap[5]);
    CHECK_FALSE(ps.next_path.has_value());
    update_ecn_bitmap(ps, false, 0);
    REQUIRE(ps.next_path.has_value());
    CHECK(*ps.next_path == 0);
}

TEST_CASE("adjust_cwnd hand traces") {
    const CcParams p = params400();
    const SimTime now = microseconds(100);
    auto fresh = [&](double cwnd) {
        CcState s;
        s.cwnd = cwnd;
        s.base_rtt = microseconds(8);
        s.last_decrease_ts = SimTime::zero();
        s.last_selfai_ts = now;  // keep the fairness step out of the way
        return s;
    };

    SUBCASE("increase is capped at max_cwnd") {
        CcState s = fresh(p.max_cwnd);
        auto u = adjust_cwnd(s, p, false, SimTime::zero(), 0, 4096, now);
        CHECK(u.branch == CwndBranch::DelayIncrease);
        CHECK(s.cwnd == p.max_cwnd);
    }
    SUBCASE("multiplicative decrease by 0.6") {
        CcState s = fresh(200000);
        // EWMA lands on exactly 16us: 0.875 * a + 0.125 * 10us = 16us
        s.avg_delay = (16e6 - 0.125 * 10e6) / 0.875;
        auto u = adjust_cwnd(s, p, true, microseconds(10), 300000, 4096, now);
        CHECK(u.branch == CwndBranch::Multiplicative);
        CHECK(s.avg_delay == doctest::Approx(16e6).epsilon(1e-12));
        CHECK(s.cwnd == doctest::Approx(0.6 * 200000).epsilon(1e-12));
        CHECK(s.last_decrease_ts == now);
    }
    SUBCASE("achievedBDP assignment") {
        CcState s = fresh(200000);
        s.avg_delay = 30e6;
        auto u = adjust_cwnd(s, p, true, microseconds(30), 20000, 4096, now);
        CHECK(u.branch == CwndBranch::AchievedBdp);
        CHECK(s.cwnd == 20000.0);
    }
    SUBCASE("no decrease within one base RTT of the last") {
        CcState s = fresh(200000);
        s.avg_delay = 16e6;
        s.last_decrease_ts = now - microseconds(4);
        auto u = adjust_cwnd(s, p, true, microseconds(10), 300000, 4096, now);
        CHECK(u.branch == CwndBranch::None);
        CHECK(s.cwnd == 200000.0);
    }
    SUBCASE("fast increase scales beta by the acked share") {
        CcState s = fresh(200000);
        auto u = adjust_cwnd(s, p, false, microseconds(30), 0, 4096, now);
        CHECK(u.branch == CwndBranch::FastIncrease);
        CHECK(s.cwnd == doctest::Approx(200000 + p.beta * 4096 / 200000).epsilon(1e-12));
    }
    SUBCASE("delay increase is proportional to headroom") {
        CcState s = fresh(200000);
        auto u = adjust_cwnd(s, p, false, microseconds(2), 0, 8192, now);
        CHECK(u.branch == CwndBranch::DelayIncrease);
        CHECK(s.cwnd == doctest::Approx(200000 + p.alpha * 6e6 * 8192 / 200000).epsilon(1e-12));
    }
    SUBCASE("fairness step once per base RTT") {
        CcState s = fresh(200000);
        s.last_selfai_ts = SimTime::zero();
        auto u = adjust_cwnd(s, p, true, microseconds(8), 0, 4096, now);
        CHECK(u.branch == CwndBranch::None);
        CHECK(u.fairness);
        CHECK(s.cwnd == doctest::Approx(200000 + p.eta).epsilon(1e-12));
        u = adjust_cwnd(s, p, true, microseconds(8), 0, 4096, now + microseconds(1));
        CHECK_FALSE(u.fairness);
    }
    SUBCASE("window never drops below one MTU") {
        CcState s = fresh(200000);
        s.avg_delay = 30e6;
        adjust_cwnd(s, p, true, microseconds(30), 0, 4096, now);
        CHECK(s.cwnd == 4096.0);
    }
}

TEST_CASE("EWMA converges geometrically to a constant delay") {
    const CcParams p = params400();
    CcState s;
    s.cwnd = 200000;
    s.base_rtt = microseconds(8);
    const double d = 5e6;
    for (int n = 1; n <= 60; ++n) {
        adjust_cwnd(s, p, true, sim::picoseconds(5000000), 0, 0, SimTime::zero());
        const double expected = d * (1.0 - std::pow(1.0 - p.ewma, n));
        CHECK(std::abs(s.avg_delay - expected) <= 1e-9 * expected);
    }
}

TEST_CASE("achievedBDP window") {
    AchievedBdpState s;
    const SimTime base = microseconds(8);
    const SimTime target = microseconds(8);
    update_achieved_bdp(s, true, 4096, microseconds(1), base, target);
    CHECK(s.rx_count == 0);
    update_achieved_bdp(s, false, 8192, microseconds(2), base, target);
    CHECK(s.rx_count == 8192);
    s.rx_count = 120000;
    const auto a = update_achieved_bdp(s, false, 0, microseconds(17), base, target);
    CHECK(a == 120000);
    CHECK(s.rx_count == 0);
    CHECK(s.rxcount_clear_ts == microseconds(17));
}

TEST_CASE("out-of-order threshold") {
    CHECK(ooo_threshold(40960, 4096, 5) == 10);
    CHECK(11 > ooo_threshold(40960, 4096, 5));
    CHECK(ooo_threshold(8192, 4096, 5) == 5);
    CHECK_FALSE(4 > ooo_threshold(8192, 4096, 5));
    CHECK(ooo_threshold(40961, 4096, 5) == 11);
}

TEST_CASE("receiver state machine") {
    ReceiverState r(1024);
    SUBCASE("in-order arrival advances and asks for a SACK") {
        auto o = receiver_on_data(r, 0, 4096, 16384);
        CHECK(o.sack_due);
        CHECK(r.epsn == 1);
        CHECK(r.bytes_recvd == 4096);
    }
    SUBCASE("gap arrival counts as out of order") {
        auto o = receiver_on_data(r, 3, 4096, 16384);
        CHECK_FALSE(o.sack_due);
        CHECK(r.ooo_counter == 1);
        CHECK(r.received(3));
        CHECK(r.epsn == 0);
        receiver_on_data(r, 0, 4096, 16384);
        CHECK(r.epsn == 1);
        CHECK(r.ooo_counter == 0);
    }
    SUBCASE("duplicates are not counted") {
        receiver_on_data(r, 0, 4096, 16384);
        auto o = receiver_on_data(r, 0, 4096, 16384);
        CHECK(o.duplicate);
        CHECK(r.bytes_recvd == 4096);
        receiver_on_data(r, 5, 4096, 16384);
        o = receiver_on_data(r, 5, 4096, 16384);
        CHECK(o.duplicate);
        CHECK(r.bytes_recvd == 8192);
    }
    SUBCASE("coalescing threshold") {
        receiver_on_data(r, 2, 4096, 16384);
        receiver_on_data(r, 3, 4096, 16384);
        receiver_on_data(r, 4, 4096, 16384);
        auto o = receiver_on_data(r, 5, 4096, 16384);
        CHECK(o.sack_due);
    }
    SUBCASE("arrival beyond the window overflows") {
        auto o = receiver_on_data(r, 1024, 4096, 16384);
        CHECK(o.overflow);
        CHECK(r.window_overflows == 1);
        CHECK(r.bytes_recvd == 0);
    }
}

TEST_CASE("SACK construction") {
    SUBCASE("no holes") {
        ReceiverState r(1024);
        for (Psn i = 0; i < 10; ++i) {
            receiver_on_data(r, i, 4096, 16384);
        }
        auto s = build_sack(r, SackEcho{3, true, microseconds(1)});
        CHECK(s.epsn == 10);
        CHECK(s.sack_base == 10);
        CHECK(s.sack_bitmap == 0);
        CHECK(s.bytes_recvd == 40960);
        CHECK(s.echo_entropy == 3);
        CHECK(s.echo_ecn);
        CHECK_FALSE(s.for_probe);
        CHECK(r.coalesce_accum == 0);
        CHECK_FALSE(r.lpsn.has_value());
    }
    SUBCASE("segment chosen from the lowest PSN since the last SACK") {
        ReceiverState r(1024);
        for (Psn i = 0; i < 100; ++i) {
            receiver_on_data(r, i, 4096, 1 << 30);
        }
        build_sack(r, SackEcho{});
        receiver_on_data(r, 101, 4096, 1 << 30);
        receiver_on_data(r, 130, 4096, 1 << 30);
        // lowest since last SACK is 101 -> base 100
        auto s = build_sack(r, SackEcho{});
        CHECK(s.epsn == 100);
        CHECK(s.sack_base == 100);
        CHECK(s.sack_bitmap == ((std::uint64_t{1} << 1) | (std::uint64_t{1} << 30)));
        // only 130 since the last SACK: 100 + floor(30 / 64) * 64 = 100
        receiver_on_data(r, 131, 4096, 1 << 30);
        s = build_sack(r, SackEcho{});
        CHECK(s.sack_base == 100);
        receiver_on_data(r, 170, 4096, 1 << 30);
        s = build_sack(r, SackEcho{});
        CHECK(s.sack_base == 164);
        CHECK(s.sack_bitmap == (std::uint64_t{1} << 6));
    }
    SUBCASE("probe reply uses the requested base") {
        ReceiverState r(1024);
        receiver_on_data(r, 0, 4096, 16384);
        receiver_on_data(r, 70, 4096, 16384);
        auto s = build_sack(r, SackEcho{}, Psn{64});
        CHECK(s.for_probe);
        CHECK(s.sack_base == 64);
        CHECK(s.sack_bitmap == (std::uint64_t{1} << 6));
    }
}

namespace {

struct Rig {
    explicit Rig(std::uint64_t seed = 1)
        : net(sched, net::TopologySpec::fat_tree(32, 16, 16, sim::gbps(400)), net::FabricConfig{}, seed),
          tp(net, params400(), false) {
        net.set_sink(tp);
    }
    sim::Scheduler sched;
    net::Network net;
    StrackTransport tp;
};

net::Packet sack_packet(Psn epsn, SimTime echo_ts) {
    net::Packet p;
    p.kind = net::PacketKind::Sack;
    p.sack = net::SackPayload{};
    p.sack->epsn = epsn;
    p.sack->sack_base = epsn;
    p.sack->echo_tx_timestamp = echo_ts;
    return p;
}

}  // namespace

TEST_CASE("inflight arithmetic from sent, received and claimed bytes") {
    Rig rig;
    rig.tp.submit(MessageInfo{1, 0, 16, 20 * 4096});
    StrackSender* s = rig.tp.sender(0, 16);
    REQUIRE(s != nullptr);
    while (s->pull(SimTime::zero())) {
    }
    CHECK(s->bytes_sent() == 20 * 4096);
    CHECK(s->inflight_bytes() == 20 * 4096);
    s->on_sack(sack_packet(10, SimTime::zero()));
    CHECK(s->bytes_recvd() == 40960);
    CHECK(s->inflight_bytes() == 40960);
    CHECK_THROWS_AS(s->on_sack(sack_packet(21, SimTime::zero())), std::runtime_error);
}

TEST_CASE("quiescent single-path flows never recover or probe") {
    Rig rig;
    rig.tp.submit(MessageInfo{1, 0, 16, 2000000});
    rig.tp.submit(MessageInfo{2, 1, 2, 2000000});
    rig.sched.run_until(sim::milliseconds(1));
    CHECK(rig.tp.progress(1).acked == 2000000);
    CHECK(rig.tp.progress(2).acked == 2000000);
    CHECK(rig.tp.stats().recoveries == 0);
    CHECK(rig.tp.stats().probes_sent == 0);
    CHECK(rig.tp.stats().rto_fires == 0);
    CHECK(rig.tp.stats().retransmitted_bytes == 0);
    CHECK(rig.tp.stats().cwnd_checks > 0);
    CHECK(rig.tp.stats().path_checks > 0);
}

TEST_CASE("probe timer follows the last SACK") {
    Rig rig;
    // every DATA packet vanishes on the sender's NIC link
    rig.net.add_impairment({net::parse_link("host0->tor0"), 1.0, false}, 1);
    rig.tp.submit(MessageInfo{1, 0, 16, 3 * 4096});
    StrackSender* s = rig.tp.sender(0, 16);
    rig.sched.run_until(microseconds(10));
    CHECK(rig.tp.stats().probes_sent == 0);
    s->on_sack(sack_packet(0, SimTime::zero()));
    rig.sched.run_until(microseconds(33));
    CHECK(rig.tp.stats().probes_sent == 0);
    rig.sched.run_until(microseconds(34));
    CHECK(rig.tp.stats().probes_sent == 1);
    // the reply finds nothing delivered: probe-based recovery
    rig.sched.run_until(microseconds(50));
    CHECK(rig.tp.stats().probe_recoveries >= 1);
    CHECK(rig.tp.stats().retransmitted_bytes >= 3 * 4096);
}

TEST_CASE("silence re-probes every probe interval") {
    Rig rig;
    // receiver's SACKs and probe replies are all lost
    rig.net.add_impairment({net::parse_link("host16->tor1"), 1.0, true}, 1);
    rig.tp.submit(MessageInfo{1, 0, 16, 3 * 4096});
    rig.sched.run_until(microseconds(24) - sim::picoseconds(1));
    CHECK(rig.tp.stats().probes_sent == 0);
    rig.sched.run_until(microseconds(24));
    CHECK(rig.tp.stats().probes_sent == 1);
    rig.sched.run_until(microseconds(48));
    CHECK(rig.tp.stats().probes_sent == 2);
    CHECK(rig.tp.stats().rto_fires == 0);
    // timeout declares all three packets lost
    rig.sched.run_until(microseconds(501));
    CHECK(rig.tp.stats().rto_fires == 1);
    CHECK(rig.tp.stats().retransmitted_bytes == 3 * 4096);
}

TEST_CASE("random loss is repaired and every message completes") {
    Rig rig(7);
    rig.net.add_impairment({net::parse_link("tor0->spine3"), 0.02, true}, 7);
    rig.net.add_impairment({net::parse_link("tor1->spine5"), 0.02, true}, 7);
    for (std::uint32_t i = 0; i < 8; ++i) {
        rig.tp.submit(MessageInfo{i, i, 16 + i, 2000000});
    }
    rig.sched.run_until(sim::milliseconds(20));
    for (std::uint32_t i = 0; i < 8; ++i) {
        CHECK(rig.tp.progress(i).acked == 2000000);
    }
    const auto& c = rig.net.counters();
    CHECK(c.injected_drops > 0);
    CHECK(c.data_bytes_injected == c.data_bytes_delivered + c.data_bytes_dropped + rig.net.data_bytes_in_flight());
    for (const auto* snd : rig.tp.senders()) {
        CHECK(snd->inflight_bytes() == 0);
        CHECK(snd->cwnd() >= 4096);
        CHECK(snd->cwnd() <= 400000);
    }
}
