#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "strack/net/network.hpp"
#include "strack/transport/transport.hpp"

namespace strack::telemetry {

using sim::SimTime;

enum class QueueScope : std::uint8_t { AllSwitchPorts, LastHop };

struct TelemetryConfig {
    SimTime sample_interval = sim::microseconds(1);
    SimTime qdelay_threshold = sim::microseconds(8);
    bool full_logging = false;  ///< record every queue sample, not only those above the threshold
    SimTime tput_window = sim::microseconds(100);
    QueueScope scope = QueueScope::AllSwitchPorts;
};

struct QueueSample {
    SimTime time;
    std::uint32_t switch_id = 0;
    std::uint16_t queue_id = 0;
    SimTime delay;
    double arrival_gbps = 0.0;
};

enum class EventKind : std::uint8_t { Drop, PfcPause, PfcResume };

struct NetEvent {
    SimTime time;
    EventKind kind = EventKind::Drop;
    net::DropReason reason = net::DropReason::Buffer;
    std::string node;
    std::uint16_t port = 0;
    net::PacketKind packet = net::PacketKind::Data;
    net::FlowId flow = 0;
    net::MsgId msg = 0;
    net::Psn psn = 0;
    SimTime sent;  ///< sender transmit time of a dropped packet
};

std::string event_name(const NetEvent& e);

/// Delay series of one port, recorded at every sample regardless of the
/// logging threshold.
struct WatchSeries {
    const net::Port* port = nullptr;
    std::vector<SimTime> time;
    std::vector<SimTime> delay;
};

/// Periodic queue sampler plus drop / PFC / delivery recorder for one run.
class Collector : public net::NetObserver, public transport::TransportListener, public sim::EventTarget {
public:
    Collector(net::Network& net, TelemetryConfig cfg);

    /// Begins sampling at the current time. Sampling stops by itself once
    /// nothing else is scheduled, or after stop().
    void start();
    void stop() { stopped_ = true; }

    std::size_t watch(const net::Port& port);
    const WatchSeries& watched(std::size_t i) const { return watches_.at(i); }

    const TelemetryConfig& config() const { return cfg_; }
    const std::vector<QueueSample>& qdelay() const { return samples_; }
    const std::vector<NetEvent>& events() const { return events_; }
    std::uint64_t drops_for(net::MsgId id) const;

    /// Delivered-bytes rate of a message in consecutive windows covering
    /// [0, until). `window` must be a multiple of tput_window.
    std::vector<double> throughput_gbps(net::MsgId id, SimTime window, SimTime until) const;
    /// Raw delivered bytes per tput_window bin, keyed by message.
    const std::map<net::MsgId, std::vector<std::uint64_t>>& delivery_bins() const { return bins_; }

    void on_drop(SimTime t, const net::Port& port, const net::Packet& pkt, net::DropReason reason) override;
    void on_pfc(SimTime t, const net::Port& port, bool pause) override;
    void on_bytes_delivered(net::MsgId id, std::uint64_t bytes, SimTime t) override;
    void on_event(std::uint32_t kind, std::uint64_t arg) override;

private:
    struct Sampled {
        const net::Port* port;
        std::uint32_t switch_id;
        std::uint64_t last_arrived = 0;
    };

    void sample();

    net::Network& net_;
    TelemetryConfig cfg_;
    std::vector<Sampled> ports_;
    std::vector<WatchSeries> watches_;
    std::vector<QueueSample> samples_;
    std::vector<NetEvent> events_;
    std::map<net::MsgId, std::uint64_t> drops_;
    std::map<net::MsgId, std::vector<std::uint64_t>> bins_;
    bool running_ = false;
    bool stopped_ = false;
};

}  // namespace strack::telemetry
