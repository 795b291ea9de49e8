#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "strack/net/packet.hpp"
#include "strack/net/topology.hpp"
#include "strack/sim/rng.hpp"

namespace strack::workload {

using net::HostId;
using net::MsgId;

struct MessageRecord {
    MsgId id = 0;
    HostId src = 0;
    HostId dst = 0;
    std::uint64_t bytes = 0;
    std::vector<MsgId> deps;
    std::uint32_t job = 0;
};

using Trace = std::vector<MessageRecord>;

enum class CollectiveAlgo : std::uint8_t { Dbt, Ring, Hd, A2a };

CollectiveAlgo parse_algo(const std::string& name);
std::string to_string(CollectiveAlgo a);

struct CollectiveSpec {
    CollectiveAlgo algo = CollectiveAlgo::Ring;
    std::uint32_t ranks = 2;
    std::uint64_t collective_bytes = 0;
    std::uint64_t chunk_bytes = 128 * 1000;
    std::uint32_t parallel_degree = 1;  ///< A2A only
    std::vector<HostId> placement;      ///< rank -> host; empty means identity
    std::uint32_t job = 0;

    void validate() const;
    HostId host(std::uint32_t rank) const { return placement.empty() ? rank : placement[rank]; }
};

/// Random derangement over hosts 0..n-1: every host sends one message and
/// receives one message.
Trace gen_permutation(std::uint32_t n, std::uint64_t msg_size, sim::RngStream& rng);

/// `fanin` senders to `dst`. With `spread_tors` the senders are taken round
/// robin from ToRs other than the receiver's before reusing its own.
Trace gen_incast(std::uint32_t fanin, HostId dst, std::uint64_t msg_size, const net::TopologySpec& topo,
                 bool spread_tors = true);

/// Ring, halving-doubling or double-binary-tree allreduce split into chunks
/// with chunk-level dependencies. Ids start at `first_id`.
Trace gen_allreduce(const CollectiveSpec& spec, MsgId first_id = 0);

/// Rank n sends collective_bytes/ranks to (n+k) % ranks in round k; round k
/// waits for round k - parallel_degree.
Trace gen_alltoall(const CollectiveSpec& spec, MsgId first_id = 0);

Trace gen_collective(const CollectiveSpec& spec, MsgId first_id = 0);

/// Disjoint random host subsets, one per job.
std::vector<std::vector<HostId>> place_jobs(std::uint32_t jobs, std::uint32_t ranks_per_job, std::uint32_t hosts,
                                            sim::RngStream& rng);

/// Heap-layout tree used by DBT: children of position i are 2i+1 and 2i+2.
/// The second tree places ranks in reverse order.
struct TreeLinks {
    std::vector<std::int64_t> parent;  ///< -1 for the root
    std::vector<std::vector<std::uint32_t>> children;
};
TreeLinks dbt_tree(std::uint32_t ranks, bool mirrored);

/// Throws std::invalid_argument on duplicate ids, missing dependencies,
/// self-addressed or empty messages, or cycles.
void validate_trace(const Trace& trace);

/// Text format, one record per line: "msg_id src dst bytes deps job" where
/// deps is a comma-separated id list or "-". Lines starting with '#' are
/// comments.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);

}  // namespace strack::workload
