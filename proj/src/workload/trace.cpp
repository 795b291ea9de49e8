#include "strack/workload/trace.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace strack::workload {

namespace {

struct Range {
    std::uint64_t lo;
    std::uint64_t hi;
};

struct Piece {
    Range range;
    MsgId id;
};

bool overlaps(Range a, Range b) { return a.lo < b.hi && b.lo < a.hi; }

std::vector<Range> split(Range r, std::uint64_t chunk) {
    std::vector<Range> out;
    for (std::uint64_t lo = r.lo; lo < r.hi; lo += chunk) {
        out.push_back({lo, std::min(r.hi, lo + chunk)});
    }
    return out;
}

class TraceBuilder {
public:
    TraceBuilder(const CollectiveSpec& spec, MsgId first_id) : spec_(spec), next_(first_id) {}

    MsgId add(std::uint32_t src_rank, std::uint32_t dst_rank, std::uint64_t bytes, std::vector<MsgId> deps) {
        MessageRecord m;
        m.id = next_++;
        m.src = spec_.host(src_rank);
        m.dst = spec_.host(dst_rank);
        m.bytes = bytes;
        m.deps = std::move(deps);
        m.job = spec_.job;
        trace_.push_back(std::move(m));
        return trace_.back().id;
    }

    Trace take() { return std::move(trace_); }

private:
    const CollectiveSpec& spec_;
    MsgId next_;
    Trace trace_;
};

Trace gen_ring(const CollectiveSpec& s, MsgId first_id) {
    const std::uint32_t R = s.ranks;
    std::vector<Range> segments;
    std::uint64_t lo = 0;
    for (std::uint32_t i = 0; i < R; ++i) {
        const std::uint64_t len = s.collective_bytes / R + (i < s.collective_bytes % R ? 1 : 0);
        segments.push_back({lo, lo + len});
        lo += len;
    }
    TraceBuilder b(s, first_id);
    // ids[r][c] of the previous step, per sending rank
    std::vector<std::vector<MsgId>> prev(R);
    for (std::uint32_t t = 0; t < 2 * (R - 1); ++t) {
        std::vector<std::vector<MsgId>> cur(R);
        for (std::uint32_t r = 0; r < R; ++r) {
            const std::uint32_t seg = (r + R - t % R) % R;
            const auto chunks = split(segments[seg], s.chunk_bytes);
            const std::uint32_t left = (r + R - 1) % R;
            for (std::size_t c = 0; c < chunks.size(); ++c) {
                std::vector<MsgId> deps;
                if (t > 0) {
                    deps.push_back(prev[left][c]);
                }
                cur[r].push_back(b.add(r, (r + 1) % R, chunks[c].hi - chunks[c].lo, std::move(deps)));
            }
        }
        prev = std::move(cur);
    }
    return b.take();
}

Trace gen_hd(const CollectiveSpec& s, MsgId first_id) {
    const std::uint32_t R = s.ranks;
    std::uint32_t m = 0;
    while ((1U << m) < R) {
        ++m;
    }
    TraceBuilder b(s, first_id);
    std::vector<Range> range(R, Range{0, s.collective_bytes});
    std::vector<std::vector<Piece>> prov(R);

    auto deps_for = [&](std::uint32_t r, Range chunk) {
        std::vector<MsgId> deps;
        for (const Piece& p : prov[r]) {
            if (overlaps(p.range, chunk)) {
                deps.push_back(p.id);
            }
        }
        return deps;
    };

    // reduce-scatter: halve the owned range each round
    for (std::uint32_t k = 0; k < m; ++k) {
        const std::uint32_t d = R >> (k + 1);
        std::vector<std::vector<Piece>> sent(R);
        std::vector<Range> kept(R);
        for (std::uint32_t r = 0; r < R; ++r) {
            const Range cur = range[r];
            const std::uint64_t mid = cur.lo + (cur.hi - cur.lo) / 2;
            const bool low = (r & d) == 0;
            const Range give = low ? Range{mid, cur.hi} : Range{cur.lo, mid};
            kept[r] = low ? Range{cur.lo, mid} : Range{mid, cur.hi};
            for (const Range& c : split(give, s.chunk_bytes)) {
                sent[r].push_back({c, b.add(r, r ^ d, c.hi - c.lo, deps_for(r, c))});
            }
        }
        for (std::uint32_t r = 0; r < R; ++r) {
            range[r] = kept[r];
            prov[r] = sent[r ^ d];
        }
    }
    // allgather: double the owned range each round
    for (std::uint32_t j = 0; j < m; ++j) {
        const std::uint32_t d = 1U << j;
        std::vector<std::vector<Piece>> sent(R);
        for (std::uint32_t r = 0; r < R; ++r) {
            for (const Range& c : split(range[r], s.chunk_bytes)) {
                sent[r].push_back({c, b.add(r, r ^ d, c.hi - c.lo, deps_for(r, c))});
            }
        }
        std::vector<Range> next(R);
        for (std::uint32_t r = 0; r < R; ++r) {
            const Range other = range[r ^ d];
            next[r] = Range{std::min(range[r].lo, other.lo), std::max(range[r].hi, other.hi)};
            for (const Piece& p : sent[r ^ d]) {
                prov[r].push_back(p);
            }
        }
        range = std::move(next);
    }
    return b.take();
}

Trace gen_dbt(const CollectiveSpec& s, MsgId first_id) {
    const std::uint32_t R = s.ranks;
    const std::uint64_t half[2] = {s.collective_bytes - s.collective_bytes / 2, s.collective_bytes / 2};
    const TreeLinks trees[2] = {dbt_tree(R, false), dbt_tree(R, true)};
    std::vector<Range> chunks[2] = {split({0, half[0]}, s.chunk_bytes), split({0, half[1]}, s.chunk_bytes)};
    TraceBuilder b(s, first_id);

    const std::size_t nchunks = std::max(chunks[0].size(), chunks[1].size());
    for (std::size_t c = 0; c < nchunks; ++c) {
        for (int t = 0; t < 2; ++t) {
            if (c >= chunks[t].size()) {
                continue;
            }
            const TreeLinks& tree = trees[t];
            const std::uint64_t bytes = chunks[t][c].hi - chunks[t][c].lo;
            // reduce: leaves first, so walk ranks by descending depth
            std::vector<std::uint32_t> order(R);
            std::iota(order.begin(), order.end(), 0U);
            auto depth = [&](std::uint32_t r) {
                int dd = 0;
                for (std::int64_t p = tree.parent[r]; p >= 0; p = tree.parent[p]) {
                    ++dd;
                }
                return dd;
            };
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b2) { return depth(a) > depth(b2); });
            std::vector<MsgId> up(R, 0);
            for (std::uint32_t r : order) {
                if (tree.parent[r] < 0) {
                    continue;
                }
                std::vector<MsgId> deps;
                for (std::uint32_t ch : tree.children[r]) {
                    deps.push_back(up[ch]);
                }
                up[r] = b.add(r, static_cast<std::uint32_t>(tree.parent[r]), bytes, std::move(deps));
            }
            // broadcast: root first
            std::vector<MsgId> down(R, 0);
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                const std::uint32_t r = *it;
                std::vector<MsgId> deps;
                if (tree.parent[r] < 0) {
                    for (std::uint32_t ch : tree.children[r]) {
                        deps.push_back(up[ch]);
                    }
                } else {
                    deps.push_back(down[r]);
                }
                for (std::uint32_t ch : tree.children[r]) {
                    down[ch] = b.add(r, ch, bytes, deps);
                }
            }
        }
    }
    return b.take();
}

}  // namespace

CollectiveAlgo parse_algo(const std::string& name) {
    if (name == "dbt" || name == "DBT") return CollectiveAlgo::Dbt;
    if (name == "ring" || name == "RING") return CollectiveAlgo::Ring;
    if (name == "hd" || name == "HD") return CollectiveAlgo::Hd;
    if (name == "a2a" || name == "A2A") return CollectiveAlgo::A2a;
    throw net::ConfigError("unknown collective algorithm '" + name + "' (dbt, ring, hd, a2a)");
}

std::string to_string(CollectiveAlgo a) {
    switch (a) {
    case CollectiveAlgo::Dbt: return "dbt";
    case CollectiveAlgo::Ring: return "ring";
    case CollectiveAlgo::Hd: return "hd";
    case CollectiveAlgo::A2a: return "a2a";
    }
    return "unknown";
}

void CollectiveSpec::validate() const {
    if (ranks < 2) {
        throw net::ConfigError("collective ranks must be at least 2");
    }
    if (algo == CollectiveAlgo::Hd && (ranks & (ranks - 1)) != 0) {
        throw net::ConfigError("HD allreduce needs a power-of-two rank count (got " + std::to_string(ranks) + ")");
    }
    if (chunk_bytes == 0 || collective_bytes == 0 || chunk_bytes > collective_bytes) {
        throw net::ConfigError("collective chunk size must lie in (0, collective bytes]");
    }
    if (algo == CollectiveAlgo::A2a && (parallel_degree == 0 || parallel_degree > ranks - 1)) {
        throw net::ConfigError("A2A parallel_degree must lie in [1, ranks-1]");
    }
    if (!placement.empty() && placement.size() != ranks) {
        throw net::ConfigError("collective placement size does not match ranks");
    }
}

Trace gen_permutation(std::uint32_t n, std::uint64_t msg_size, sim::RngStream& rng) {
    if (n < 2) {
        throw net::ConfigError("permutation needs at least 2 hosts");
    }
    std::vector<HostId> dst(n);
    for (;;) {
        std::iota(dst.begin(), dst.end(), 0U);
        for (std::uint32_t i = n - 1; i > 0; --i) {
            std::swap(dst[i], dst[rng.uniform_index(i + 1)]);
        }
        bool fixed = false;
        for (std::uint32_t i = 0; i < n && !fixed; ++i) {
            fixed = dst[i] == i;
        }
        if (!fixed) {
            break;
        }
    }
    Trace t;
    for (std::uint32_t i = 0; i < n; ++i) {
        t.push_back(MessageRecord{i, i, dst[i], msg_size, {}, 0});
    }
    return t;
}

Trace gen_incast(std::uint32_t fanin, HostId dst, std::uint64_t msg_size, const net::TopologySpec& topo,
                 bool spread_tors) {
    if (dst >= topo.hosts || fanin == 0 || fanin >= topo.hosts) {
        throw net::ConfigError("incast: fanin must lie in [1, hosts-1] and dst inside the topology");
    }
    std::vector<HostId> senders;
    if (spread_tors) {
        const std::uint32_t hpt = topo.hosts_per_tor();
        const std::uint32_t home = topo.tor_of(dst);
        std::vector<std::uint32_t> tors;
        for (std::uint32_t k = 1; k <= topo.tors; ++k) {
            tors.push_back((home + k) % topo.tors);  // receiver's own ToR comes last
        }
        for (std::uint32_t slot = 0; slot < hpt && senders.size() < fanin; ++slot) {
            for (std::uint32_t t : tors) {
                if (t == home && tors.size() > 1) {
                    continue;
                }
                const HostId h = t * hpt + slot;
                if (h != dst && senders.size() < fanin) {
                    senders.push_back(h);
                }
            }
        }
        for (std::uint32_t slot = 0; slot < hpt && senders.size() < fanin; ++slot) {
            const HostId h = home * hpt + slot;
            if (h != dst && tors.size() > 1) {
                senders.push_back(h);
            }
        }
    } else {
        for (HostId h = 0; h < topo.hosts && senders.size() < fanin; ++h) {
            if (h != dst) {
                senders.push_back(h);
            }
        }
    }
    Trace t;
    for (std::uint32_t i = 0; i < senders.size(); ++i) {
        t.push_back(MessageRecord{i, senders[i], dst, msg_size, {}, 0});
    }
    return t;
}

Trace gen_allreduce(const CollectiveSpec& spec, MsgId first_id) {
    spec.validate();
    switch (spec.algo) {
    case CollectiveAlgo::Ring: return gen_ring(spec, first_id);
    case CollectiveAlgo::Hd: return gen_hd(spec, first_id);
    case CollectiveAlgo::Dbt: return gen_dbt(spec, first_id);
    case CollectiveAlgo::A2a: break;
    }
    throw net::ConfigError("gen_allreduce: A2A is not an allreduce");
}

Trace gen_alltoall(const CollectiveSpec& spec, MsgId first_id) {
    spec.validate();
    const std::uint32_t R = spec.ranks;
    TraceBuilder b(spec, first_id);
    const std::uint64_t per_dst = spec.collective_bytes / R;
    if (per_dst == 0) {
        throw net::ConfigError("A2A collective bytes smaller than the rank count");
    }
    const auto chunks = split({0, per_dst}, spec.chunk_bytes);
    // rounds[n][k] = ids of rank n's round-k chunks
    std::vector<std::vector<std::vector<MsgId>>> rounds(R, std::vector<std::vector<MsgId>>(R));
    for (std::uint32_t k = 1; k < R; ++k) {
        for (std::uint32_t n = 0; n < R; ++n) {
            std::vector<MsgId> deps;
            if (k > spec.parallel_degree) {
                deps = rounds[n][k - spec.parallel_degree];
            }
            for (const Range& c : chunks) {
                rounds[n][k].push_back(b.add(n, (n + k) % R, c.hi - c.lo, deps));
            }
        }
    }
    return b.take();
}

Trace gen_collective(const CollectiveSpec& spec, MsgId first_id) {
    return spec.algo == CollectiveAlgo::A2a ? gen_alltoall(spec, first_id) : gen_allreduce(spec, first_id);
}

std::vector<std::vector<HostId>> place_jobs(std::uint32_t jobs, std::uint32_t ranks_per_job, std::uint32_t hosts,
                                            sim::RngStream& rng) {
    if (static_cast<std::uint64_t>(jobs) * ranks_per_job > hosts) {
        throw net::ConfigError("place_jobs: " + std::to_string(jobs) + " jobs x " + std::to_string(ranks_per_job) +
                               " ranks do not fit on " + std::to_string(hosts) + " hosts");
    }
    std::vector<HostId> pool(hosts);
    std::iota(pool.begin(), pool.end(), 0U);
    for (std::uint32_t i = hosts - 1; i > 0; --i) {
        std::swap(pool[i], pool[rng.uniform_index(i + 1)]);
    }
    std::vector<std::vector<HostId>> out(jobs);
    for (std::uint32_t j = 0; j < jobs; ++j) {
        out[j].assign(pool.begin() + j * ranks_per_job, pool.begin() + (j + 1) * ranks_per_job);
    }
    return out;
}

TreeLinks dbt_tree(std::uint32_t ranks, bool mirrored) {
    TreeLinks t;
    t.parent.assign(ranks, -1);
    t.children.assign(ranks, {});
    auto rank_at = [&](std::uint32_t pos) { return mirrored ? ranks - 1 - pos : pos; };
    for (std::uint32_t pos = 1; pos < ranks; ++pos) {
        const std::uint32_t parent = rank_at((pos - 1) / 2);
        t.parent[rank_at(pos)] = parent;
        t.children[parent].push_back(rank_at(pos));
    }
    return t;
}

void validate_trace(const Trace& trace) {
    std::unordered_map<MsgId, std::size_t> index;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& m = trace[i];
        if (m.bytes == 0) {
            throw std::invalid_argument("message " + std::to_string(m.id) + " has zero size");
        }
        if (m.src == m.dst) {
            throw std::invalid_argument("message " + std::to_string(m.id) + " sends to itself");
        }
        if (!index.emplace(m.id, i).second) {
            throw std::invalid_argument("duplicate message id " + std::to_string(m.id));
        }
    }
    std::vector<std::uint32_t> indeg(trace.size(), 0);
    std::vector<std::vector<std::size_t>> out(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        for (MsgId d : trace[i].deps) {
            auto it = index.find(d);
            if (it == index.end()) {
                throw std::invalid_argument("message " + std::to_string(trace[i].id) + " depends on unknown " +
                                            std::to_string(d));
            }
            out[it->second].push_back(i);
            ++indeg[i];
        }
    }
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (indeg[i] == 0) {
            ready.push_back(i);
        }
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        const std::size_t i = ready.back();
        ready.pop_back();
        ++seen;
        for (std::size_t j : out[i]) {
            if (--indeg[j] == 0) {
                ready.push_back(j);
            }
        }
    }
    if (seen != trace.size()) {
        throw std::invalid_argument("trace dependency graph has a cycle");
    }
}

void write_trace(std::ostream& out, const Trace& trace) {
    out << "# msg_id src dst bytes deps job\n";
    for (const auto& m : trace) {
        out << m.id << ' ' << m.src << ' ' << m.dst << ' ' << m.bytes << ' ';
        if (m.deps.empty()) {
            out << '-';
        }
        for (std::size_t i = 0; i < m.deps.size(); ++i) {
            out << (i ? "," : "") << m.deps[i];
        }
        out << ' ' << m.job << '\n';
    }
}

Trace read_trace(std::istream& in) {
    Trace t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        MessageRecord m;
        std::string deps;
        if (!(ls >> m.id >> m.src >> m.dst >> m.bytes >> deps >> m.job)) {
            throw std::invalid_argument("trace line " + std::to_string(lineno) + ": expected 6 fields");
        }
        if (deps != "-") {
            std::istringstream ds(deps);
            std::string tok;
            while (std::getline(ds, tok, ',')) {
                m.deps.push_back(std::stoull(tok));
            }
        }
        t.push_back(std::move(m));
    }
    return t;
}

}  // namespace strack::workload
