#include <doctest.h>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "strack/sim/rng.hpp"
#include "strack/sim/scheduler.hpp"
#include "strack/sim/time.hpp"

using namespace strack::sim;

namespace {

struct Recorder : EventTarget {
    explicit Recorder(Scheduler& s) : EventTarget(s) {}
    void on_event(std::uint32_t kind, std::uint64_t arg) override {
        log.push_back({scheduler().now(), kind, arg});
        if (hook) {
            hook(kind, arg);
        }
    }
    struct Entry {
        SimTime at;
        std::uint32_t kind;
        std::uint64_t arg;
    };
    std::vector<Entry> log;
    std::function<void(std::uint32_t, std::uint64_t)> hook;
};

}  // namespace

TEST_CASE("empty queue advances the clock") {
    Scheduler s;
    CHECK(s.run_until(milliseconds(1)) == 0);
    CHECK(s.now() == milliseconds(1));
}

TEST_CASE("events dispatch in time order") {
    Scheduler s;
    Recorder r(s);
    s.schedule(microseconds(3), r, 3);
    s.schedule(microseconds(1), r, 1);
    s.schedule(microseconds(2), r, 2);
    CHECK(s.run_until(microseconds(3)) == 3);
    REQUIRE(r.log.size() == 3);
    CHECK(r.log[0].kind == 1);
    CHECK(r.log[1].kind == 2);
    CHECK(r.log[2].kind == 3);
    CHECK(r.log[2].at == microseconds(3));
}

TEST_CASE("equal timestamps keep insertion order") {
    Scheduler s;
    Recorder r(s);
    for (std::uint64_t i = 0; i < 10; ++i) {
        s.schedule(microseconds(5), r, 0, i);
    }
    s.run();
    for (std::uint64_t i = 0; i < 10; ++i) {
        CHECK(r.log[i].arg == i);
    }
}

TEST_CASE("events scheduled while draining are dispatched in the same call") {
    Scheduler s;
    Recorder r(s);
    r.hook = [&](std::uint32_t kind, std::uint64_t) {
        if (kind == 1) {
            s.schedule(microseconds(2), r, 2);
            s.schedule(microseconds(20), r, 3);
        }
    };
    s.schedule(microseconds(1), r, 1);
    CHECK(s.run_until(microseconds(5)) == 2);
    CHECK(s.pending() == 1);
    CHECK(s.now() == microseconds(5));
}

TEST_CASE("cancel and past scheduling") {
    Scheduler s;
    Recorder r(s);
    auto h = s.schedule(microseconds(1), r, 1);
    s.schedule(microseconds(2), r, 2);
    CHECK(s.cancel(h));
    CHECK_FALSE(s.cancel(h));
    s.run();
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].kind == 2);
    CHECK_THROWS_AS(s.schedule(microseconds(1), r, 1), std::logic_error);
}

TEST_CASE("dispatch hash is reproducible") {
    auto run = [] {
        Scheduler s;
        Recorder a(s);
        Recorder b(s);
        for (int i = 0; i < 50; ++i) {
            s.schedule(nanoseconds(37 * (i % 7)), i % 2 ? a : b, static_cast<std::uint32_t>(i));
        }
        s.run();
        return s.dispatch_hash();
    };
    CHECK(run() == run());
}

TEST_CASE("time arithmetic is exact in picoseconds") {
    CHECK(serialization_time(4096, gbps(400)).ps() == 81920);
    CHECK(serialization_time(64, gbps(100)).ps() == 5120);
    CHECK(bytes_in(microseconds(8), gbps(400)) == 400000);
    CHECK(has_exact_byte_time(gbps(400)));
    CHECK_FALSE(has_exact_byte_time(LinkRate{300000000000LL}));
    CHECK(from_us(1.5) == nanoseconds(1500));
}

TEST_CASE("uniform stays in range and is seed-deterministic") {
    RngStream a(42, stream_id("x"));
    RngStream b(42, stream_id("x"));
    const double hi = 1.0;
    const double lo = hi - 1e-9;
    for (int i = 0; i < 1000; ++i) {
        const double v = a.uniform(lo, hi);
        CHECK(v >= lo);
        CHECK(v < hi);
        CHECK(v == b.uniform(lo, hi));
    }
    RngStream c(42, stream_id("y"));
    RngStream d(42, stream_id("x"));
    CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform(0,1) mean over a million draws") {
    RngStream r(7, stream_id("mean"));
    double sum = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        sum += r.uniform(0.0, 1.0);
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::abs(sum / n - 0.5) <= 0.01);
}

TEST_CASE("uniform_index covers its range") {
    RngStream r(3, 0);
    std::vector<int> hits(5, 0);
    for (int i = 0; i < 5000; ++i) {
        ++hits[r.uniform_index(5)];
    }
    for (int h : hits) {
        CHECK(h > 800);
    }
}
