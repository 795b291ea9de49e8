#pragma once

#include <cstdint>
#include <deque>
#include <optional>

#include "strack/net/packet.hpp"
#include "strack/sim/rng.hpp"

namespace strack::net {

enum class BufferMode : std::uint8_t { Lossy, Lossless };

enum class EnqueueOutcome : std::uint8_t { Accepted, Dropped, PfcTriggered };

struct QueueLimits {
    std::uint64_t capacity_bytes = 0;  ///< lossy drop limit (5 BDP by default)
    std::uint64_t kmin_bytes = 0;
    std::uint64_t kmax_bytes = 0;
    BufferMode mode = BufferMode::Lossy;
};

/// Marking probability for a packet leaving with `queue_behind` bytes still
/// queued: 0 up to kmin, linear to 1 at kmax, 1 beyond.
double ecn_mark_probability(std::uint64_t queue_behind, std::uint64_t kmin, std::uint64_t kmax);

/// Per-egress FIFO with a strict-priority control lane.
class SwitchQueue {
public:
    explicit SwitchQueue(QueueLimits limits) : limits_(limits) {}

    const QueueLimits& limits() const { return limits_; }

    /// Lossy: drops DATA iff occupancy + size > capacity. Control packets and
    /// lossless mode always accept. A dropped packet is left untouched.
    EnqueueOutcome enqueue(Packet&& pkt);

    /// Control lane first. Departing DATA is CE-marked with probability
    /// ecn_mark_probability(occupancy after removal). When `data_allowed` is
    /// false (PFC pause) only the control lane is served.
    std::optional<Packet> dequeue_and_mark(sim::RngStream& rng, bool data_allowed = true);

    /// Bytes queued in the data lane (DATA and PROBE).
    std::uint64_t occupancy_bytes() const { return occupancy_; }
    /// Bytes of DATA packets only, for the conservation ledger.
    std::uint64_t data_payload_bytes() const { return payload_; }
    bool has_control() const { return !control_.empty(); }
    bool has_data() const { return !data_.empty(); }
    bool empty() const { return control_.empty() && data_.empty(); }
    std::size_t data_packets() const { return data_.size(); }

    /// Drains every queued packet (used when a link fails).
    std::deque<Packet> drain();

private:
    QueueLimits limits_;
    std::deque<Packet> control_;
    std::deque<Packet> data_;
    std::uint64_t occupancy_ = 0;
    std::uint64_t payload_ = 0;
};

}  // namespace strack::net
