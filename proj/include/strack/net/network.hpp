#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strack/net/ecmp.hpp"
#include "strack/net/packet.hpp"
#include "strack/net/shared_buffer.hpp"
#include "strack/net/switch_queue.hpp"
#include "strack/net/topology.hpp"
#include "strack/sim/rng.hpp"
#include "strack/sim/scheduler.hpp"

namespace strack::net {

enum class NodeKind : std::uint8_t { Host, Tor, Spine };
enum class DropReason : std::uint8_t { Buffer, Injected, LinkDown };

std::string_view to_string(DropReason r);

class Network;
class Port;

/// Egress-side buffering and marking parameters for every switch port.
struct FabricConfig {
    BufferMode mode = BufferMode::Lossy;
    double kmin_bdp = 0.25;
    double kmax_bdp = 0.75;
    double drop_bdp = 5.0;
    double pfc_alpha = 0.25;
    std::uint32_t pfc_hysteresis_mtus = 2;
};

/// Directed link between two nodes, e.g. tor3 -> spine1.
struct LinkId {
    NodeKind from_kind = NodeKind::Tor;
    std::uint32_t from = 0;
    NodeKind to_kind = NodeKind::Spine;
    std::uint32_t to = 0;

    bool operator==(const LinkId&) const = default;
};

/// Parses "tor3->spine1" / "host0->tor0" / "spine2->tor5".
LinkId parse_link(const std::string& text);
std::string to_string(const LinkId& link);
/// True when `link` names a cabled link of `spec` (failed or not).
bool link_exists(const TopologySpec& spec, const LinkId& link);

struct LinkImpairment {
    LinkId link;
    double drop_rate = 0.0;
    bool control_too = false;  ///< also drop SACK/ACK packets (probe-recovery testing)
};

/// Receives packet-level events for logging. Every hook is optional.
class NetObserver {
public:
    virtual ~NetObserver() = default;
    virtual void on_drop(SimTime, const Port&, const Packet&, DropReason) {}
    virtual void on_pfc(SimTime, const Port& /*frame egress*/, bool /*pause*/) {}
};

/// Byte ledger over DATA packets only.
struct NetCounters {
    std::uint64_t data_bytes_injected = 0;
    std::uint64_t data_bytes_delivered = 0;
    std::uint64_t data_bytes_dropped = 0;
    std::uint64_t data_packets_dropped = 0;
    std::uint64_t buffer_drops = 0;
    std::uint64_t injected_drops = 0;
    std::uint64_t pfc_pauses = 0;
    std::uint64_t pfc_resumes = 0;
    std::uint64_t shared_buffer_overruns = 0;
};

class PacketSource {
public:
    virtual ~PacketSource() = default;
    virtual std::optional<Packet> next_packet(SimTime now, bool data_allowed) = 0;
    virtual std::uint64_t backlog_bytes() const { return 0; }
};

class Node {
public:
    Node(NodeKind kind, std::uint32_t index) : kind_(kind), index_(index) {}
    virtual ~Node() = default;
    virtual void receive(Packet&& pkt, std::uint16_t ingress) = 0;

    NodeKind kind() const { return kind_; }
    std::uint32_t index() const { return index_; }
    std::string name() const;

private:
    NodeKind kind_;
    std::uint32_t index_;
};

/// Transmit side of one direction of a link: serialization, propagation,
/// PFC pause state and optional impairments.
class Port : public sim::EventTarget {
public:
    Port(Network& net, Node& owner, std::uint16_t index, LinkRate rate, SimTime latency);

    void connect(Node& peer, std::uint16_t peer_port) { peer_ = &peer; peer_port_ = peer_port; }
    void set_source(PacketSource& src) { source_ = &src; }

    /// Starts transmitting if the link is idle and something is eligible.
    void kick();

    void set_paused(bool paused);
    bool paused() const { return paused_; }
    void set_failed() { failed_ = true; }
    bool failed() const { return failed_; }
    void set_impairment(double drop_rate, bool control_too, std::uint64_t seed);

    void note_arrival(std::uint64_t bytes) { arrived_bytes_ += bytes; }
    std::uint64_t arrived_bytes() const { return arrived_bytes_; }
    std::uint64_t backlog_bytes() const { return source_ ? source_->backlog_bytes() : 0; }

    Node& owner() const { return *owner_; }
    Node* peer() const { return peer_; }
    std::uint16_t index() const { return index_; }
    LinkRate rate() const { return rate_; }
    SimTime latency() const { return latency_; }
    std::uint64_t bytes_sent() const { return bytes_sent_; }
    std::uint64_t data_bytes_in_flight() const;

    void on_event(std::uint32_t kind, std::uint64_t arg) override;

private:
    enum EventKind : std::uint32_t { kTxDone = 1, kArrive = 2 };

    Network* net_;
    Node* owner_;
    std::uint16_t index_;
    LinkRate rate_;
    SimTime latency_;
    Node* peer_ = nullptr;
    std::uint16_t peer_port_ = 0;
    PacketSource* source_ = nullptr;

    bool busy_ = false;
    bool kick_pending_ = false;
    bool paused_ = false;
    bool failed_ = false;
    std::optional<Packet> current_;
    std::deque<Packet> wire_;
    std::uint64_t bytes_sent_ = 0;
    std::uint64_t arrived_bytes_ = 0;

    double drop_rate_ = 0.0;
    bool drop_control_ = false;
    std::optional<sim::RngStream> drop_rng_;
};

class Switch : public Node {
public:
    Switch(Network& net, NodeKind kind, std::uint32_t index);

    void receive(Packet&& pkt, std::uint16_t ingress) override;

    /// Buffers `pkt` on `egress` and applies the drop / PFC policy.
    EnqueueOutcome enqueue(std::uint16_t egress, Packet&& pkt, std::uint16_t ingress);

    Port& port(std::uint16_t i) { return *ports_[i]; }
    const Port& port(std::uint16_t i) const { return *ports_[i]; }
    std::size_t port_count() const { return ports_.size(); }
    SwitchQueue& queue(std::uint16_t i) { return egress_[i]->queue; }
    SharedBuffer* shared_buffer() { return buffer_.get(); }

    /// Global switch id used for ECMP hashing and telemetry (ToRs first).
    std::uint32_t switch_id() const { return switch_id_; }

    void add_port(std::unique_ptr<Port> port, QueueLimits limits, std::uint64_t rng_seed);
    void init_shared_buffer(const FabricConfig& cfg, std::uint32_t mtu);
    void fail_port(std::uint16_t i);

private:
    struct Egress : PacketSource {
        Egress(Switch& sw, std::uint16_t idx, QueueLimits limits, std::uint64_t seed);
        std::optional<Packet> next_packet(SimTime now, bool data_allowed) override;
        std::uint64_t backlog_bytes() const override { return queue.occupancy_bytes(); }
        Switch& owner;
        std::uint16_t index;
        SwitchQueue queue;
        sim::RngStream rng;
    };

    std::uint16_t route(const Packet& pkt);
    void apply_pfc(const std::vector<PfcAction>& actions);

    Network& net_;
    std::uint32_t switch_id_;
    std::vector<std::unique_ptr<Port>> ports_;
    std::vector<std::unique_ptr<Egress>> egress_;
    std::unique_ptr<SharedBuffer> buffer_;
};

/// Transport endpoint that the host NIC pulls DATA/PROBE packets from.
class TxSource {
public:
    virtual ~TxSource() = default;
    virtual std::optional<Packet> pull(SimTime now) = 0;

private:
    friend class Host;
    bool queued_ = false;
};

/// Where hosts hand packets addressed to them.
class PacketSink {
public:
    virtual ~PacketSink() = default;
    virtual void deliver(Packet&& pkt, HostId at) = 0;
};

class Host : public Node, public PacketSource {
public:
    Host(Network& net, std::uint32_t index);

    void receive(Packet&& pkt, std::uint16_t ingress) override;
    std::optional<Packet> next_packet(SimTime now, bool data_allowed) override;

    /// Control packets (and probes) leave ahead of DATA.
    void send_priority(Packet&& pkt);
    /// Marks `src` as having something to send.
    void wake(TxSource& src);

    Port& nic() { return *nic_; }
    void attach_nic(std::unique_ptr<Port> nic) { nic_ = std::move(nic); }

private:
    Network& net_;
    std::unique_ptr<Port> nic_;
    std::deque<Packet> priority_;
    std::deque<TxSource*> ready_;
};

/// The whole fabric: hosts, ToRs, spines and the links between them.
class Network {
public:
    Network(sim::Scheduler& sched, TopologySpec spec, FabricConfig fabric, std::uint64_t seed);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    sim::Scheduler& scheduler() { return sched_; }
    SimTime now() const { return sched_.now(); }
    const TopologySpec& spec() const { return spec_; }
    const FabricConfig& fabric() const { return fabric_; }
    SimTime link_latency() const { return link_latency_; }

    Host& host(std::uint32_t i) { return *hosts_[i]; }
    Switch& tor(std::uint32_t i) { return *tors_[i]; }
    Switch& spine(std::uint32_t i) { return *spines_[i]; }
    std::uint32_t host_count() const { return static_cast<std::uint32_t>(hosts_.size()); }

    /// Every switch egress port, ToRs first.
    std::vector<Port*> switch_ports();
    /// The ToR port facing `host` (the last hop towards it).
    Port& last_hop_port(HostId host);
    Port& link_port(const LinkId& link);

    /// Uplink port indices on `tor` usable for traffic to `dst_tor`.
    const std::vector<std::uint16_t>& eligible_uplinks(std::uint32_t tor, std::uint32_t dst_tor) const {
        return eligible_[tor * spec_.tors + dst_tor];
    }

    /// Static or mid-run failure of both directions of a ToR-spine link.
    void fail_link(std::uint32_t tor, std::uint32_t spine);
    void add_impairment(const LinkImpairment& imp, std::uint64_t seed);

    void set_sink(PacketSink& sink) { sink_ = &sink; }
    PacketSink* sink() { return sink_; }
    void set_observer(NetObserver* obs) { observer_ = obs; }

    NetCounters& counters() { return counters_; }
    const NetCounters& counters() const { return counters_; }
    std::uint64_t data_bytes_in_flight();

    // Hooks used by ports and switches.
    void record_drop(const Port& port, const Packet& pkt, DropReason reason);
    void record_pfc(const Port& port, bool pause);

private:
    void build();
    void recompute_eligible();

    sim::Scheduler& sched_;
    TopologySpec spec_;
    FabricConfig fabric_;
    std::uint64_t seed_;
    SimTime link_latency_;
    std::vector<std::unique_ptr<Host>> hosts_;
    std::vector<std::unique_ptr<Switch>> tors_;
    std::vector<std::unique_ptr<Switch>> spines_;
    std::vector<std::vector<std::uint16_t>> eligible_;
    PacketSink* sink_ = nullptr;
    NetObserver* observer_ = nullptr;
    NetCounters counters_;
};

}  // namespace strack::net
