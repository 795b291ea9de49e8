#include <doctest.h>

#include <set>

#include "strack/net/network.hpp"
#include "strack/roce/dcqcn.hpp"
#include "strack/roce/roce.hpp"

using namespace strack;
using namespace strack::roce;
using sim::microseconds;
using sim::SimTime;

TEST_CASE("DCQCN without congestion stays at line rate") {
    Dcqcn d(sim::gbps(400), DcqcnParams{});
    for (int i = 0; i < 100; ++i) {
        d.on_bytes_sent(1 << 20, microseconds(10 * i));
    }
    d.advance(sim::milliseconds(10));
    CHECK(d.rate_bps() == 400e9);
}

TEST_CASE("one CNP at alpha 1 halves the rate") {
    DcqcnParams p;
    Dcqcn d(sim::gbps(400), p);
    d.on_cnp(microseconds(1));
    CHECK(d.rate_bps() == 200e9);
    CHECK(d.target_bps() == 400e9);
    CHECK(d.alpha() == doctest::Approx((1 - p.g) * 1.0 + p.g));
}

TEST_CASE("timer-driven fast recovery and alpha decay") {
    DcqcnParams p;
    Dcqcn d(sim::gbps(400), p);
    d.on_cnp(SimTime::zero());
    d.advance(microseconds(55));
    // one timer epoch: halfway back to the 400G target, alpha decays once
    CHECK(d.rate_bps() == doctest::Approx(300e9).epsilon(1e-12));
    CHECK(d.alpha() == doctest::Approx(1.0 - p.g).epsilon(1e-12));
    d.advance(microseconds(110));
    CHECK(d.rate_bps() == doctest::Approx(350e9).epsilon(1e-12));
    // eventually back at line rate
    d.advance(sim::milliseconds(50));
    CHECK(d.rate_bps() == 400e9);
}

TEST_CASE("additive increase after fast recovery") {
    DcqcnParams p;
    Dcqcn d(sim::gbps(100), p);
    d.on_cnp(SimTime::zero());  // rc 50G, rt 100G
    d.on_cnp(microseconds(50)); // rc 25G + a hair, rt 50G
    const double rc0 = d.rate_bps();
    const double rt0 = d.target_bps();
    // five timer epochs of fast recovery: rc -> rt - (rt - rc) / 32
    d.advance(microseconds(50 + 5 * 55));
    CHECK(d.target_bps() == rt0);
    CHECK(d.rate_bps() == doctest::Approx(rt0 - (rt0 - rc0) / 32).epsilon(1e-12));
    // sixth epoch leaves fast recovery: additive step on the target
    d.advance(microseconds(50 + 6 * 55));
    CHECK(d.target_bps() == doctest::Approx(rt0 + p.rai_fraction * 100e9).epsilon(1e-12));
}

TEST_CASE("CNP storm decays to the rate floor") {
    DcqcnParams p;
    Dcqcn d(sim::gbps(400), p);
    for (int i = 0; i < 200; ++i) {
        d.on_cnp(microseconds(50 * i));
    }
    CHECK(d.rate_bps() == doctest::Approx(400e9 * p.min_rate_fraction));
    CHECK(d.cnps() == 200);
}

TEST_CASE("queue pair striping") {
    CHECK(qp_stripe(10, 1) == std::vector<std::uint64_t>{10});
    CHECK(qp_stripe(4096, 4) == std::vector<std::uint64_t>{1024, 1024, 1024, 1024});  // 16 MiB of 4 KiB packets
    CHECK(qp_stripe(10, 4) == std::vector<std::uint64_t>{3, 3, 2, 2});
    CHECK_THROWS(qp_stripe(1, 0));
}

namespace {

struct Rig {
    explicit Rig(std::uint32_t qps, bool lossless = true) : net(sched, spec(), fabric(lossless), 3), tp(net, params(qps), 3) {
        net.set_sink(tp);
    }
    static net::TopologySpec spec() { return net::TopologySpec::fat_tree(32, 16, 16, sim::gbps(400)); }
    static net::FabricConfig fabric(bool lossless) {
        net::FabricConfig f;
        f.mode = lossless ? net::BufferMode::Lossless : net::BufferMode::Lossy;
        f.kmin_bdp = 1.0;
        f.kmax_bdp = 1.0;
        return f;
    }
    static RoceParams params(std::uint32_t qps) {
        RoceParams p;
        p.qps_per_conn = qps;
        return p;
    }
    sim::Scheduler sched;
    net::Network net;
    RoceTransport tp;
};

}  // namespace

TEST_CASE("lossless run: no drops, no NACKs, everything completes") {
    Rig rig(1);
    for (std::uint32_t i = 0; i < 8; ++i) {
        rig.tp.submit(transport::MessageInfo{i, i, 16, 1000000});
    }
    rig.sched.run_until(sim::milliseconds(5));
    for (std::uint32_t i = 0; i < 8; ++i) {
        CHECK(rig.tp.progress(i).acked == 1000000);
    }
    CHECK(rig.net.counters().data_packets_dropped == 0);
    CHECK(rig.tp.stats().nacks_sent == 0);
    CHECK(rig.tp.stats().retransmitted_bytes == 0);
    CHECK(rig.tp.stats().cnps_sent > 0);
}

TEST_CASE("go-back-N resends from the hole") {
    Rig rig(1);
    rig.net.add_impairment({net::parse_link("tor0->spine0"), 0.01, false}, 3);
    for (std::uint32_t s = 0; s < 16; ++s) {
        rig.net.add_impairment({net::parse_link("tor0->spine" + std::to_string(s)), 0.01, false}, 3);
    }
    rig.tp.submit(transport::MessageInfo{0, 0, 16, 4000000});
    rig.sched.run_until(sim::milliseconds(20));
    CHECK(rig.tp.progress(0).acked == 4000000);
    const auto drops = rig.net.counters().data_bytes_dropped;
    CHECK(drops > 0);
    CHECK(rig.tp.stats().nacks_sent > 0);
    // every drop costs at least the packets behind it that were already sent
    CHECK(rig.tp.stats().retransmitted_bytes > drops);
}

TEST_CASE("queue pairs keep their entropy") {
    Rig rig(4);
    std::set<net::Entropy> seen;
    for (std::uint16_t q = 0; q < 4; ++q) {
        const auto e = rig.tp.qp_entropy(0, 16, q);
        CHECK(e == rig.tp.qp_entropy(0, 16, q));
        seen.insert(e);
    }
    CHECK(seen.size() == 4);
    rig.tp.submit(transport::MessageInfo{0, 0, 16, 10 * 4096});
    rig.sched.run_until(sim::milliseconds(1));
    CHECK(rig.tp.progress(0).acked == 10 * 4096);
    RoceParams zero;
    zero.qps_per_conn = 0;
    CHECK_THROWS(zero.validate());
}
