#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "strack/net/network.hpp"
#include "strack/transport/strack.hpp"
#include "strack/workload/replay.hpp"
#include "strack/workload/trace.hpp"

using namespace strack;
using namespace strack::workload;
using sim::microseconds;
using sim::SimTime;

namespace {

std::map<HostId, std::uint64_t> bytes_by_src(const Trace& t) {
    std::map<HostId, std::uint64_t> out;
    for (const auto& m : t) {
        out[m.src] += m.bytes;
    }
    return out;
}

std::map<HostId, std::size_t> count_by_src(const Trace& t) {
    std::map<HostId, std::size_t> out;
    for (const auto& m : t) {
        ++out[m.src];
    }
    return out;
}

CollectiveSpec spec(CollectiveAlgo algo, std::uint32_t ranks, std::uint64_t bytes, std::uint64_t chunk) {
    CollectiveSpec s;
    s.algo = algo;
    s.ranks = ranks;
    s.collective_bytes = bytes;
    s.chunk_bytes = chunk;
    return s;
}

}  // namespace

TEST_CASE("permutation is a derangement") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        sim::RngStream rng(seed, 0);
        const Trace t = gen_permutation(32, 1000, rng);
        REQUIRE(t.size() == 32);
        std::set<HostId> dsts;
        for (const auto& m : t) {
            CHECK(m.src != m.dst);
            CHECK(m.bytes == 1000);
            CHECK(m.deps.empty());
            dsts.insert(m.dst);
        }
        CHECK(dsts.size() == 32);
        CHECK_NOTHROW(validate_trace(t));
    }
    sim::RngStream rng(7, 0);
    const Trace two = gen_permutation(2, 10, rng);
    CHECK(two[0].dst == 1);
    CHECK(two[1].dst == 0);
    CHECK_THROWS(gen_permutation(1, 10, rng));
}

TEST_CASE("permutation depends only on the seed") {
    sim::RngStream a(5, 1);
    sim::RngStream b(5, 1);
    sim::RngStream c(6, 1);
    const Trace ta = gen_permutation(64, 1, a);
    const Trace tb = gen_permutation(64, 1, b);
    const Trace tc = gen_permutation(64, 1, c);
    bool same_ab = true;
    bool same_ac = true;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        same_ab = same_ab && ta[i].dst == tb[i].dst;
        same_ac = same_ac && ta[i].dst == tc[i].dst;
    }
    CHECK(same_ab);
    CHECK_FALSE(same_ac);
}

TEST_CASE("incast senders") {
    const auto topo = net::TopologySpec::fat_tree(64, 16, 16, sim::gbps(400));
    SUBCASE("spread across remote ToRs first") {
        const Trace t = gen_incast(6, 0, 500, topo);
        REQUIRE(t.size() == 6);
        std::map<std::uint32_t, int> per_tor;
        for (const auto& m : t) {
            CHECK(m.dst == 0);
            CHECK(m.src != 0);
            ++per_tor[topo.tor_of(m.src)];
        }
        CHECK(per_tor.count(0) == 0);
        CHECK(per_tor[1] == 2);
        CHECK(per_tor[2] == 2);
        CHECK(per_tor[3] == 2);
    }
    SUBCASE("full fan-in covers every other host once") {
        const Trace t = gen_incast(63, 5, 500, topo);
        std::set<HostId> srcs;
        for (const auto& m : t) {
            srcs.insert(m.src);
        }
        CHECK(srcs.size() == 63);
        CHECK(srcs.count(5) == 0);
    }
    SUBCASE("sequential senders") {
        const Trace t = gen_incast(3, 1, 500, topo, false);
        CHECK(t[0].src == 0);
        CHECK(t[1].src == 2);
        CHECK(t[2].src == 3);
    }
    CHECK_THROWS(gen_incast(64, 0, 1, topo));
    CHECK_THROWS(gen_incast(1, 64, 1, topo));
}

TEST_CASE("ring allreduce shape and volume") {
    const std::uint64_t S = 4000000;
    SUBCASE("one chunk per segment") {
        const Trace t = gen_allreduce(spec(CollectiveAlgo::Ring, 4, S, S));
        CHECK(t.size() == 4 * 6);
        for (const auto& [src, n] : count_by_src(t)) {
            CHECK(n == 6);
        }
        for (const auto& m : t) {
            CHECK(m.dst == (m.src + 1) % 4);
        }
        for (const auto& [src, b] : bytes_by_src(t)) {
            CHECK(b == 2 * 3 * S / 4);
        }
        CHECK_NOTHROW(validate_trace(t));
    }
    SUBCASE("chunked") {
        const Trace t = gen_allreduce(spec(CollectiveAlgo::Ring, 8, S, 128000));
        for (const auto& [src, b] : bytes_by_src(t)) {
            CHECK(b == 2 * 7 * S / 8);
        }
        // every step after the first waits on exactly one chunk from the left neighbour
        std::map<MsgId, const MessageRecord*> by_id;
        for (const auto& m : t) {
            by_id[m.id] = &m;
        }
        std::size_t roots = 0;
        for (const auto& m : t) {
            if (m.deps.empty()) {
                ++roots;
                continue;
            }
            REQUIRE(m.deps.size() == 1);
            const auto* d = by_id.at(m.deps[0]);
            CHECK(d->dst == m.src);
            CHECK(d->bytes == m.bytes);
        }
        CHECK(roots == 8 * ((S / 8 + 127999) / 128000));
        CHECK_NOTHROW(validate_trace(t));
    }
}

TEST_CASE("halving-doubling allreduce") {
    const std::uint64_t S = 1 << 20;
    const Trace t = gen_allreduce(spec(CollectiveAlgo::Hd, 8, S, S));
    // log2(8) rounds of reduce-scatter plus as many of allgather, one message each
    CHECK(t.size() == 8 * 6);
    for (const auto& [src, b] : bytes_by_src(t)) {
        CHECK(b == 2 * (S - S / 8));
    }
    for (const auto& m : t) {
        const HostId x = m.src ^ m.dst;
        CHECK((x == 1 || x == 2 || x == 4));
    }
    // the first round sends half the buffer to the rank 4 apart
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(t[i].deps.empty());
        CHECK(t[i].bytes == S / 2);
        CHECK((t[i].src ^ t[i].dst) == 4);
    }
    CHECK_NOTHROW(validate_trace(t));
    CHECK_THROWS(gen_allreduce(spec(CollectiveAlgo::Hd, 6, S, S)));
}

TEST_CASE("double binary tree") {
    SUBCASE("tree links") {
        const TreeLinks a = dbt_tree(7, false);
        CHECK(a.parent[0] == -1);
        CHECK(a.parent[1] == 0);
        CHECK(a.parent[2] == 0);
        CHECK(a.parent[5] == 2);
        CHECK(a.children[1] == std::vector<std::uint32_t>{3, 4});
        const TreeLinks b = dbt_tree(7, true);
        CHECK(b.parent[6] == -1);
        CHECK(b.parent[5] == 6);
        CHECK(b.parent[0] == 4);
    }
    SUBCASE("three ranks") {
        const std::uint64_t S = 600;
        const Trace t = gen_allreduce(spec(CollectiveAlgo::Dbt, 3, S, S));
        // per tree: two edges, each used up and down
        CHECK(t.size() == 8);
        std::uint64_t total = 0;
        for (const auto& m : t) {
            total += m.bytes;
        }
        CHECK(total == 2 * (3 - 1) * S);
        CHECK_NOTHROW(validate_trace(t));
    }
    SUBCASE("volume with chunking and odd sizes") {
        const std::uint64_t S = 16000001;
        const Trace t = gen_allreduce(spec(CollectiveAlgo::Dbt, 8, S, 128000));
        std::uint64_t total = 0;
        for (const auto& m : t) {
            total += m.bytes;
        }
        CHECK(total == 2 * 7 * S);
        CHECK_NOTHROW(validate_trace(t));
    }
    SUBCASE("broadcast waits for the reduction") {
        const Trace t = gen_allreduce(spec(CollectiveAlgo::Dbt, 4, 400, 400));
        std::map<MsgId, const MessageRecord*> by_id;
        for (const auto& m : t) {
            by_id[m.id] = &m;
        }
        // a message from the root of the first tree (rank 0) depends on both children's reductions
        for (const auto& m : t) {
            if (m.src == 0 && m.deps.size() == 2) {
                for (MsgId d : m.deps) {
                    CHECK(by_id.at(d)->dst == 0);
                }
            }
        }
    }
}

TEST_CASE("all-to-all rounds and parallel degree") {
    const std::uint64_t S = 800;
    SUBCASE("serial") {
        const Trace t = gen_alltoall(spec(CollectiveAlgo::A2a, 4, S, S));
        CHECK(t.size() == 4 * 3);
        for (const auto& [src, b] : bytes_by_src(t)) {
            CHECK(b == 3 * S / 4);
        }
        std::set<std::pair<HostId, HostId>> pairs;
        for (const auto& m : t) {
            pairs.insert({m.src, m.dst});
        }
        CHECK(pairs.size() == 12);
        std::size_t roots = 0;
        for (const auto& m : t) {
            roots += m.deps.empty() ? 1 : 0;
        }
        CHECK(roots == 4);
    }
    SUBCASE("two rounds in flight") {
        auto s = spec(CollectiveAlgo::A2a, 5, S, S);
        s.parallel_degree = 2;
        const Trace t = gen_alltoall(s);
        std::size_t roots = 0;
        std::map<MsgId, const MessageRecord*> by_id;
        for (const auto& m : t) {
            by_id[m.id] = &m;
            roots += m.deps.empty() ? 1 : 0;
        }
        CHECK(roots == 10);
        for (const auto& m : t) {
            const std::uint32_t k = (m.dst + 5 - m.src) % 5;
            if (k > 2) {
                REQUIRE(m.deps.size() == 1);
                const auto* d = by_id.at(m.deps[0]);
                CHECK(d->src == m.src);
                CHECK((d->dst + 5 - d->src) % 5 == k - 2);
            }
        }
    }
    auto bad = spec(CollectiveAlgo::A2a, 4, S, S);
    bad.parallel_degree = 4;
    CHECK_THROWS(gen_alltoall(bad));
}

TEST_CASE("placement maps ranks to hosts") {
    auto s = spec(CollectiveAlgo::Ring, 3, 300, 300);
    s.placement = {10, 20, 30};
    s.job = 4;
    const Trace t = gen_allreduce(s, 100);
    CHECK(t.front().id == 100);
    for (const auto& m : t) {
        CHECK(m.job == 4);
        CHECK(m.dst == (m.src == 30 ? 10U : m.src + 10));
    }
    sim::RngStream rng(3, 0);
    const auto jobs = place_jobs(8, 8, 64, rng);
    std::set<HostId> used;
    for (const auto& j : jobs) {
        CHECK(j.size() == 8);
        used.insert(j.begin(), j.end());
    }
    CHECK(used.size() == 64);
    CHECK_THROWS(place_jobs(9, 8, 64, rng));
}

TEST_CASE("trace validation") {
    Trace t{{1, 0, 1, 10, {}, 0}, {2, 1, 0, 10, {1}, 0}};
    CHECK_NOTHROW(validate_trace(t));
    SUBCASE("duplicate id") {
        t[1].id = 1;
        t[1].deps.clear();
        CHECK_THROWS_WITH(validate_trace(t), doctest::Contains("duplicate"));
    }
    SUBCASE("missing dependency") {
        t[1].deps = {9};
        CHECK_THROWS(validate_trace(t));
    }
    SUBCASE("self-addressed") {
        t[0].dst = 0;
        CHECK_THROWS(validate_trace(t));
    }
    SUBCASE("empty message") {
        t[0].bytes = 0;
        CHECK_THROWS(validate_trace(t));
    }
    SUBCASE("cycle") {
        t[0].deps = {2};
        CHECK_THROWS(validate_trace(t));
    }
}

TEST_CASE("trace text round trip") {
    auto s = spec(CollectiveAlgo::Hd, 4, 4096, 1000);
    s.job = 2;
    const Trace t = gen_allreduce(s);
    std::stringstream io;
    write_trace(io, t);
    const Trace back = read_trace(io);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back[i].id == t[i].id);
        CHECK(back[i].src == t[i].src);
        CHECK(back[i].dst == t[i].dst);
        CHECK(back[i].bytes == t[i].bytes);
        CHECK(back[i].deps == t[i].deps);
        CHECK(back[i].job == t[i].job);
    }
    std::istringstream hand("# comment\n\n7 0 3 100 - 1\n8 3 0 50 7 1\n");
    const Trace h = read_trace(hand);
    REQUIRE(h.size() == 2);
    CHECK(h[1].deps == std::vector<MsgId>{7});
    std::istringstream broken("7 0 3\n");
    CHECK_THROWS(read_trace(broken));
}

namespace {

struct Rig {
    Rig()
        : net(sched, net::TopologySpec::fat_tree(32, 16, 16, sim::gbps(400)), net::FabricConfig{}, 1),
          tp(net, transport::CcParams::derive(sim::gbps(400), microseconds(8), 4096), false) {
        net.set_sink(tp);
    }
    sim::Scheduler sched;
    net::Network net;
    transport::StrackTransport tp;
};

}  // namespace

TEST_CASE("replayer releases dependents on delivery") {
    Rig rig;
    Trace t{{0, 0, 16, 100000, {}, 0}, {1, 16, 1, 100000, {0}, 0}, {2, 2, 17, 4096, {}, 1}};
    Replayer rep(rig.sched, rig.tp, t);
    bool finished = false;
    rep.set_on_finished([&] { finished = true; });
    rep.start();
    CHECK_THROWS_WITH(rep.check_complete(), doctest::Contains("1"));
    rig.sched.run_until(sim::milliseconds(1));
    CHECK(finished);
    CHECK(rep.finished());
    CHECK_NOTHROW(rep.check_complete());
    const auto& tm = rep.timings();
    CHECK(tm[0].release == SimTime::zero());
    CHECK(tm[1].release == tm[0].delivered);
    CHECK(tm[0].delivered <= tm[0].completed);
    CHECK(tm[1].first_send >= tm[1].release);
    // 100 KB across the fabric needs at least its serialization time
    CHECK(tm[0].fct() >= SimTime::from_ps(100000LL * 8 * 1000000000000LL / 400000000000LL));
    const auto jobs = rep.jobs();
    REQUIRE(jobs.size() == 2);
    CHECK(jobs[0].messages == 2);
    CHECK(jobs[0].cct() == tm[1].completed - tm[0].first_send);
    CHECK(jobs[1].messages == 1);
    CHECK(jobs[1].cct() == tm[2].completed - tm[2].first_send);
}

TEST_CASE("replayer reports stuck messages") {
    Rig rig;
    Trace t{{0, 0, 16, 40000000, {}, 0}, {1, 16, 1, 4096, {0}, 0}};
    Replayer rep(rig.sched, rig.tp, t);
    rep.start();
    rig.sched.run_until(microseconds(20));
    CHECK_FALSE(rep.finished());
    CHECK_THROWS_WITH(rep.check_complete(), doctest::Contains("waiting"));
}
