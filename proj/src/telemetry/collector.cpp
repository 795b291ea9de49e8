#include "strack/telemetry/collector.hpp"

#include <stdexcept>

namespace strack::telemetry {

std::string event_name(const NetEvent& e) {
    switch (e.kind) {
    case EventKind::PfcPause:
        return "pfc_pause";
    case EventKind::PfcResume:
        return "pfc_resume";
    case EventKind::Drop:
        break;
    }
    return "drop_" + std::string(net::to_string(e.reason));
}

Collector::Collector(net::Network& net, TelemetryConfig cfg)
    : sim::EventTarget(net.scheduler()), net_(net), cfg_(cfg) {
    if (cfg_.sample_interval <= SimTime::zero() || cfg_.tput_window <= SimTime::zero()) {
        throw std::invalid_argument("telemetry intervals must be positive");
    }
    const auto& spec = net.spec();
    const std::uint32_t hpt = spec.hosts_per_tor();
    for (std::uint32_t t = 0; t < spec.tors; ++t) {
        net::Switch& sw = net.tor(t);
        const std::size_t n = cfg_.scope == QueueScope::LastHop ? hpt : sw.port_count();
        for (std::uint16_t p = 0; p < n; ++p) {
            ports_.push_back({&sw.port(p), sw.switch_id()});
        }
    }
    if (cfg_.scope == QueueScope::AllSwitchPorts) {
        for (std::uint32_t s = 0; s < spec.spines; ++s) {
            net::Switch& sw = net.spine(s);
            for (std::uint16_t p = 0; p < sw.port_count(); ++p) {
                ports_.push_back({&sw.port(p), sw.switch_id()});
            }
        }
    }
}

void Collector::start() {
    if (!running_) {
        running_ = true;
        scheduler().schedule(scheduler().now(), *this, 0);
    }
}

std::size_t Collector::watch(const net::Port& port) {
    watches_.push_back(WatchSeries{&port, {}, {}});
    return watches_.size() - 1;
}

void Collector::on_event(std::uint32_t, std::uint64_t) {
    sample();
    // nothing else pending means the run is over (or deadlocked)
    if (!stopped_ && !scheduler().empty() && !scheduler().stopped()) {
        scheduler().schedule_in(cfg_.sample_interval, *this, 0);
    } else {
        running_ = false;
    }
}

void Collector::sample() {
    const SimTime now = net_.now();
    const double window_s = cfg_.sample_interval.seconds();
    for (auto& s : ports_) {
        const std::uint64_t arrived = s.port->arrived_bytes();
        const std::uint64_t delta = arrived - s.last_arrived;
        s.last_arrived = arrived;
        const SimTime delay = sim::serialization_time(s.port->backlog_bytes(), s.port->rate());
        if (cfg_.full_logging || delay > cfg_.qdelay_threshold) {
            samples_.push_back(
                {now, s.switch_id, s.port->index(), delay, static_cast<double>(delta) * 8.0 / window_s * 1e-9});
        }
    }
    for (auto& w : watches_) {
        w.time.push_back(now);
        w.delay.push_back(sim::serialization_time(w.port->backlog_bytes(), w.port->rate()));
    }
}

void Collector::on_drop(SimTime t, const net::Port& port, const net::Packet& pkt, net::DropReason reason) {
    events_.push_back(NetEvent{t, EventKind::Drop, reason, port.owner().name(), port.index(), pkt.kind, pkt.flow_id,
                               pkt.msg_id, pkt.psn, pkt.tx_timestamp});
    if (pkt.kind == net::PacketKind::Data) {
        ++drops_[pkt.msg_id];
    }
}

void Collector::on_pfc(SimTime t, const net::Port& port, bool pause) {
    NetEvent e;
    e.time = t;
    e.kind = pause ? EventKind::PfcPause : EventKind::PfcResume;
    e.node = port.owner().name();
    e.port = port.index();
    e.packet = pause ? net::PacketKind::PfcPause : net::PacketKind::PfcResume;
    events_.push_back(std::move(e));
}

void Collector::on_bytes_delivered(net::MsgId id, std::uint64_t bytes, SimTime t) {
    auto& bins = bins_[id];
    const auto bin = static_cast<std::size_t>(t.ps() / cfg_.tput_window.ps());
    if (bins.size() <= bin) {
        bins.resize(bin + 1, 0);
    }
    bins[bin] += bytes;
}

std::uint64_t Collector::drops_for(net::MsgId id) const {
    auto it = drops_.find(id);
    return it == drops_.end() ? 0 : it->second;
}

std::vector<double> Collector::throughput_gbps(net::MsgId id, SimTime window, SimTime until) const {
    if (window.ps() % cfg_.tput_window.ps() != 0) {
        throw std::invalid_argument("throughput window must be a multiple of the telemetry window");
    }
    const auto per = static_cast<std::size_t>(window.ps() / cfg_.tput_window.ps());
    const auto last = static_cast<std::size_t>(until.ps() / window.ps());
    std::vector<double> out(last, 0.0);
    auto it = bins_.find(id);
    if (it == bins_.end()) {
        return out;
    }
    for (std::size_t b = 0; b < it->second.size(); ++b) {
        const std::size_t w = b / per;
        if (w < out.size()) {
            out[w] += static_cast<double>(it->second[b]);
        }
    }
    for (auto& v : out) {
        v = v * 8.0 / window.seconds() * 1e-9;
    }
    return out;
}

}  // namespace strack::telemetry
