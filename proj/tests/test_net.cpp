#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "strack/net/ecmp.hpp"
#include "strack/net/network.hpp"
#include "strack/net/shared_buffer.hpp"
#include "strack/net/switch_queue.hpp"
#include "strack/net/topology.hpp"

using namespace strack;
using namespace strack::net;
using sim::gbps;
using sim::SimTime;

namespace {

Packet data(std::uint32_t size, Psn psn = 0) {
    Packet p;
    p.kind = PacketKind::Data;
    p.size_bytes = size;
    p.psn = psn;
    return p;
}

Packet control(PacketKind k = PacketKind::Sack) {
    Packet p;
    p.kind = k;
    p.size_bytes = 64;
    return p;
}

}  // namespace

TEST_CASE("fat tree construction and validation") {
    auto spec = TopologySpec::fat_tree(128, 16, 8, gbps(400));
    CHECK(spec.tors == 8);
    CHECK(spec.uplink_speed == gbps(800));
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.tor_of(17) == 1);

    auto over = TopologySpec::fat_tree(128, 8, 8, gbps(400), 4);
    CHECK(over.uplink_speed == gbps(100));
    CHECK_NOTHROW(over.validate());

    auto bad = TopologySpec::fat_tree(128, 16, 8, gbps(400), 3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    TopologySpec uneven = spec;
    uneven.hosts = 130;
    CHECK_THROWS_AS(uneven.validate(), ConfigError);

    TopologySpec cut = spec;
    for (std::uint32_t s = 0; s < spec.spines; ++s) {
        cut.failed_links.insert({0, s});
    }
    CHECK_THROWS_AS(cut.validate(), ConfigError);

    // tor0 only reaches spine 0 and tor1 only spine 1: no common spine
    TopologySpec split = TopologySpec::fat_tree(32, 16, 2, gbps(400));
    split.failed_links = {{0, 1}, {1, 0}};
    CHECK_THROWS_AS(split.validate(), ConfigError);
}

TEST_CASE("per-hop latency makes an idle round trip equal the base RTT") {
    auto spec = TopologySpec::fat_tree(32, 16, 16, gbps(400));
    // 2 x (4096 + 64) bytes over each of two 400G tiers: 4 * 81920 + 4 * 1280 ps
    CHECK(derive_link_latency(spec).ps() == (8000000 - 332800) / 8);
    auto slow_up = TopologySpec::fat_tree(128, 8, 8, gbps(400), 4);
    // uplinks at 100G: 2*81920 + 2*327680 + 2*1280 + 2*5120
    CHECK(derive_link_latency(slow_up).ps() == (8000000 - 832000) / 8);
}

namespace {

struct OneShot : TxSource {
    std::optional<Packet> pkt;
    std::optional<Packet> pull(SimTime) override {
        auto p = std::move(pkt);
        pkt.reset();
        return p;
    }
};

struct Echo : PacketSink {
    Network* net = nullptr;
    SimTime data_at = SimTime::infinite();
    SimTime ack_at = SimTime::infinite();
    void deliver(Packet&& p, HostId at) override {
        if (p.kind == PacketKind::Data) {
            data_at = net->now();
            Packet a = control();
            a.src = at;
            a.dst = p.src;
            a.flow_id = p.flow_id;
            net->host(at).send_priority(std::move(a));
        } else {
            ack_at = net->now();
        }
    }
};

}  // namespace

TEST_CASE("idle cross-ToR round trip takes exactly net_base_rtt") {
    for (std::uint32_t oversub : {1U, 4U}) {
        sim::Scheduler sched;
        auto spec = TopologySpec::fat_tree(32, oversub == 1 ? 16 : 8, oversub == 1 ? 16 : 8, gbps(400), oversub);
        Network net(sched, spec, FabricConfig{}, 1);
        Echo echo;
        echo.net = &net;
        net.set_sink(echo);
        OneShot src;
        Packet p = data(4096);
        p.src = 0;
        p.dst = 31;
        p.entropy = 5;
        src.pkt = p;
        net.host(0).wake(src);
        sched.run();
        CHECK(echo.ack_at == sim::microseconds(8));
        CHECK(net.counters().data_bytes_injected == 4096);
        CHECK(net.counters().data_bytes_delivered == 4096);
    }
}

TEST_CASE("ECN ramp endpoints") {
    CHECK(ecn_mark_probability(0, 100, 300) == 0.0);
    CHECK(ecn_mark_probability(100, 100, 300) == 0.0);
    CHECK(ecn_mark_probability(200, 100, 300) == 0.5);
    CHECK(ecn_mark_probability(300, 100, 300) == 1.0);
    CHECK(ecn_mark_probability(10000, 100, 300) == 1.0);
    // step marking used for DCQCN
    CHECK(ecn_mark_probability(400000, 400000, 400000) == 0.0);
    CHECK(ecn_mark_probability(400001, 400000, 400000) == 1.0);
}

TEST_CASE("queue behind the departing packet decides the mark") {
    QueueLimits lim{2000000, 100000, 300000, BufferMode::Lossy};
    sim::RngStream rng(1, 0);
    SUBCASE("empty after dequeue is never marked") {
        SwitchQueue q(lim);
        for (int i = 0; i < 1000; ++i) {
            q.enqueue(data(4000));
            CHECK_FALSE(q.dequeue_and_mark(rng)->ecn_ce);
        }
    }
    SUBCASE("at or above kmax always marked") {
        SwitchQueue q(lim);
        for (int i = 0; i < 76; ++i) {
            q.enqueue(data(4000));
        }
        for (int i = 0; i < 1000; ++i) {
            q.enqueue(data(4000));
            CHECK(q.dequeue_and_mark(rng)->ecn_ce);
        }
    }
    SUBCASE("midpoint marks half the packets") {
        SwitchQueue q(lim);
        for (int i = 0; i < 50; ++i) {
            q.enqueue(data(4000));  // 200000 bytes behind every departure
        }
        int marked = 0;
        const int trials = 100000;
        for (int i = 0; i < trials; ++i) {
            q.enqueue(data(4000));
            marked += q.dequeue_and_mark(rng)->ecn_ce ? 1 : 0;
        }
        CHECK(std::abs(marked / static_cast<double>(trials) - 0.5) <= 0.02);
    }
}

TEST_CASE("lossy tail drop at the capacity boundary") {
    const std::uint64_t bdp = 400000;
    SwitchQueue q(QueueLimits{5 * bdp, bdp / 4, 3 * bdp / 4, BufferMode::Lossy});
    CHECK(q.enqueue(data(4000)) == EnqueueOutcome::Accepted);
    while (q.occupancy_bytes() < 5 * bdp) {
        REQUIRE(q.enqueue(data(4000)) == EnqueueOutcome::Accepted);
    }
    CHECK(q.occupancy_bytes() == 5 * bdp);
    Packet p = data(4000, 77);
    CHECK(q.enqueue(std::move(p)) == EnqueueOutcome::Dropped);
    CHECK(p.psn == 77);  // dropped packet left intact for logging
    CHECK(q.enqueue(control()) == EnqueueOutcome::Accepted);
    CHECK(q.occupancy_bytes() == 5 * bdp);
}

TEST_CASE("lossless queues never drop") {
    SwitchQueue q(QueueLimits{1000, 0, 0, BufferMode::Lossless});
    for (int i = 0; i < 100; ++i) {
        CHECK(q.enqueue(data(4096)) == EnqueueOutcome::Accepted);
    }
    CHECK(q.occupancy_bytes() == 409600);
}

TEST_CASE("control lane has strict priority and ignores pause") {
    SwitchQueue q(QueueLimits{1000000, 0, 0, BufferMode::Lossless});
    sim::RngStream rng(1, 0);
    q.enqueue(data(4096, 1));
    q.enqueue(control(PacketKind::Cnp));
    q.enqueue(data(4096, 2));
    q.enqueue(control(PacketKind::Sack));
    auto a = q.dequeue_and_mark(rng, false);
    REQUIRE(a);
    CHECK(a->kind == PacketKind::Cnp);
    auto b = q.dequeue_and_mark(rng, false);
    REQUIRE(b);
    CHECK(b->kind == PacketKind::Sack);
    CHECK_FALSE(q.dequeue_and_mark(rng, false));
    CHECK(q.dequeue_and_mark(rng, true)->psn == 1);
    CHECK(q.occupancy_bytes() == 4096);
}

TEST_CASE("shared buffer PAUSE and RESUME trace") {
    SharedBuffer b(1000000, 2, 0.25, 8192);
    CHECK(b.evaluate().empty());
    b.add(0, 200000);  // threshold 0.25 * 800000 = 200000, not exceeded
    CHECK(b.evaluate().empty());
    b.add(0, 1);  // 200001 > 199999.75
    auto f = b.evaluate();
    REQUIRE(f.size() == 1);
    CHECK(f[0].ingress == 0);
    CHECK(f[0].pause);
    CHECK(b.evaluate().empty());
    b.remove(0, 1000);  // 199001 vs 0.25 * 800999 - 8192 = 192057.75
    CHECK(b.evaluate().empty());
    b.remove(0, 10000);  // 189001 vs 0.25 * 810999 - 8192 = 194557.75
    f = b.evaluate();
    REQUIRE(f.size() == 1);
    CHECK_FALSE(f[0].pause);
    CHECK(b.usage(1) == 0);
}

TEST_CASE("PFC frames alternate under oscillating usage") {
    SharedBuffer b(1000000, 1, 0.25, 8192);
    sim::RngStream rng(9, 0);
    bool paused = false;
    std::uint64_t usage = 0;
    int pauses = 0;
    for (int i = 0; i < 20000; ++i) {
        if (rng.bernoulli(0.5) || usage < 4096) {
            b.add(0, 4096);
            usage += 4096;
        } else {
            b.remove(0, 4096);
            usage -= 4096;
        }
        for (const auto& a : b.evaluate()) {
            CHECK(a.pause != paused);
            paused = a.pause;
            pauses += a.pause ? 1 : 0;
        }
        if (usage > 260000) {
            b.remove(0, 40960);
            usage -= 40960;
        }
    }
    CHECK(pauses > 0);
}

TEST_CASE("switch buffer scales with capacity") {
    CHECK(scaled_switch_buffer(51.2e12) == 256ULL * 1024 * 1024);
    CHECK(scaled_switch_buffer(12.8e12) == 64ULL * 1024 * 1024);
}

TEST_CASE("ECMP is deterministic and spreads entropies evenly") {
    const std::vector<std::uint16_t> ports{8, 9, 10, 11, 12, 13, 14, 15};
    std::vector<int> hits(16, 0);
    for (std::uint32_t e = 0; e < 65536; ++e) {
        const auto p = ecmp_select(3, static_cast<Entropy>(e), 2, ports);
        CHECK(p == ecmp_select(3, static_cast<Entropy>(e), 2, ports));
        ++hits[p];
    }
    for (std::uint16_t p : ports) {
        CHECK(std::abs(hits[p] - 8192) < 8192 * 0.05);
    }
}

TEST_CASE("link names round trip") {
    const auto l = parse_link("tor3->spine1");
    CHECK(l.from_kind == NodeKind::Tor);
    CHECK(l.from == 3);
    CHECK(l.to_kind == NodeKind::Spine);
    CHECK(l.to == 1);
    CHECK(to_string(l) == "tor3->spine1");
    CHECK_THROWS(parse_link("tor3-spine1"));
}

TEST_CASE("random uplink failures pick the requested count per ToR") {
    auto spec = TopologySpec::fat_tree(128, 16, 8, gbps(400));
    auto f = random_uplink_failures(spec, 1, 5);
    CHECK(f.size() == spec.tors);
    CHECK(f == random_uplink_failures(spec, 1, 5));
    CHECK_THROWS_AS(random_uplink_failures(spec, 8, 5), ConfigError);
}
