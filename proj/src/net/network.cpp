#include "strack/net/network.hpp"

#include <regex>
#include <stdexcept>

namespace strack::net {

namespace {

std::string_view kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::Host: return "host";
    case NodeKind::Tor: return "tor";
    case NodeKind::Spine: return "spine";
    }
    return "node";
}

NodeKind parse_kind(const std::string& s) {
    if (s == "host") return NodeKind::Host;
    if (s == "tor") return NodeKind::Tor;
    return NodeKind::Spine;
}

}  // namespace

std::string_view to_string(DropReason r) {
    switch (r) {
    case DropReason::Buffer: return "buffer";
    case DropReason::Injected: return "injected";
    case DropReason::LinkDown: return "link_down";
    }
    return "unknown";
}

LinkId parse_link(const std::string& text) {
    static const std::regex re(R"(^\s*(host|tor|spine)(\d+)\s*->\s*(host|tor|spine)(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) {
        throw ConfigError("bad link '" + text + "', expected e.g. tor0->spine1");
    }
    LinkId id;
    id.from_kind = parse_kind(m[1]);
    id.from = static_cast<std::uint32_t>(std::stoul(m[2]));
    id.to_kind = parse_kind(m[3]);
    id.to = static_cast<std::uint32_t>(std::stoul(m[4]));
    return id;
}

std::string to_string(const LinkId& link) {
    return std::string(kind_name(link.from_kind)) + std::to_string(link.from) + "->" +
           std::string(kind_name(link.to_kind)) + std::to_string(link.to);
}

std::string Node::name() const { return std::string(kind_name(kind_)) + std::to_string(index_); }

// ---------------------------------------------------------------- Port

Port::Port(Network& net, Node& owner, std::uint16_t index, LinkRate rate, SimTime latency)
    : sim::EventTarget(net.scheduler()), net_(&net), owner_(&owner), index_(index), rate_(rate),
      latency_(latency) {}

void Port::kick() {
    if (busy_) {
        kick_pending_ = true;
        return;
    }
    if (failed_ || source_ == nullptr) {
        return;
    }
    for (;;) {
        busy_ = true;
        kick_pending_ = false;
        std::optional<Packet> pkt = source_->next_packet(net_->now(), !paused_);
        if (pkt) {
            bytes_sent_ += pkt->size_bytes;
            const SimTime ser = serialization_time(pkt->size_bytes, rate_);
            current_ = std::move(pkt);
            scheduler().schedule_in(ser, *this, kTxDone);
            return;
        }
        busy_ = false;
        if (!kick_pending_) {
            return;
        }
    }
}

void Port::set_paused(bool paused) {
    paused_ = paused;
    if (!paused_) {
        kick();
    }
}

void Port::set_impairment(double drop_rate, bool control_too, std::uint64_t seed) {
    drop_rate_ = drop_rate;
    drop_control_ = control_too;
    drop_rng_.emplace(seed, sim::stream_id("impair", component_id()));
}

std::uint64_t Port::data_bytes_in_flight() const {
    std::uint64_t total = 0;
    if (current_ && current_->kind == PacketKind::Data) {
        total += current_->size_bytes;
    }
    for (const auto& p : wire_) {
        if (p.kind == PacketKind::Data) {
            total += p.size_bytes;
        }
    }
    return total;
}

void Port::on_event(std::uint32_t kind, std::uint64_t) {
    if (kind == kTxDone) {
        Packet pkt = std::move(*current_);
        current_.reset();
        busy_ = false;
        bool dropped = false;
        if (failed_) {
            net_->record_drop(*this, pkt, DropReason::LinkDown);
            dropped = true;
        } else if (drop_rate_ > 0.0) {
            const bool eligible = pkt.kind == PacketKind::Data ||
                                  (drop_control_ && (pkt.kind == PacketKind::Sack || pkt.kind == PacketKind::Ack ||
                                                     pkt.kind == PacketKind::Nack));
            if (eligible && drop_rng_->bernoulli(drop_rate_)) {
                net_->record_drop(*this, pkt, DropReason::Injected);
                dropped = true;
            }
        }
        if (!dropped) {
            wire_.push_back(std::move(pkt));
            scheduler().schedule_in(latency_, *this, kArrive);
        }
        kick();
        return;
    }
    Packet pkt = std::move(wire_.front());
    wire_.pop_front();
    if (failed_) {
        net_->record_drop(*this, pkt, DropReason::LinkDown);
        return;
    }
    peer_->receive(std::move(pkt), peer_port_);
}

// ---------------------------------------------------------------- Switch

Switch::Switch(Network& net, NodeKind kind, std::uint32_t index)
    : Node(kind, index), net_(net),
      switch_id_(kind == NodeKind::Tor ? index : net.spec().tors + index) {}

Switch::Egress::Egress(Switch& sw, std::uint16_t idx, QueueLimits limits, std::uint64_t seed)
    : owner(sw), index(idx), queue(limits), rng(seed, sim::stream_id("ecn", (std::uint64_t{sw.switch_id()} << 16) | idx)) {}

std::optional<Packet> Switch::Egress::next_packet(SimTime, bool data_allowed) {
    std::optional<Packet> p = queue.dequeue_and_mark(rng, data_allowed);
    if (p && owner.buffer_ && !is_control(p->kind)) {
        owner.buffer_->remove(p->ingress_port, p->size_bytes);
        owner.apply_pfc(owner.buffer_->evaluate());
    }
    return p;
}

void Switch::add_port(std::unique_ptr<Port> port, QueueLimits limits, std::uint64_t rng_seed) {
    const auto idx = static_cast<std::uint16_t>(ports_.size());
    egress_.push_back(std::make_unique<Egress>(*this, idx, limits, rng_seed));
    port->set_source(*egress_.back());
    ports_.push_back(std::move(port));
}

void Switch::init_shared_buffer(const FabricConfig& cfg, std::uint32_t mtu) {
    if (cfg.mode != BufferMode::Lossless) {
        return;
    }
    double capacity = 0.0;
    for (const auto& p : ports_) {
        capacity += static_cast<double>(p->rate().bps);
    }
    buffer_ = std::make_unique<SharedBuffer>(scaled_switch_buffer(capacity), ports_.size(), cfg.pfc_alpha,
                                             std::uint64_t{cfg.pfc_hysteresis_mtus} * mtu);
}

void Switch::fail_port(std::uint16_t i) {
    ports_[i]->set_failed();
    for (Packet& p : egress_[i]->queue.drain()) {
        if (buffer_ && !is_control(p.kind)) {
            buffer_->remove(p.ingress_port, p.size_bytes);
        }
        net_.record_drop(*ports_[i], p, DropReason::LinkDown);
    }
    if (buffer_) {
        apply_pfc(buffer_->evaluate());
    }
}

std::uint16_t Switch::route(const Packet& pkt) {
    const TopologySpec& spec = net_.spec();
    const std::uint32_t dst_tor = spec.tor_of(pkt.dst);
    if (kind() == NodeKind::Spine) {
        return static_cast<std::uint16_t>(dst_tor);
    }
    if (dst_tor == index()) {
        return static_cast<std::uint16_t>(pkt.dst % spec.hosts_per_tor());
    }
    const auto& eligible = net_.eligible_uplinks(index(), dst_tor);
    if (eligible.empty()) {
        return UINT16_MAX;
    }
    return ecmp_select(pkt.flow_id, pkt.entropy, switch_id_, eligible);
}

void Switch::receive(Packet&& pkt, std::uint16_t ingress) {
    if (pkt.kind == PacketKind::PfcPause || pkt.kind == PacketKind::PfcResume) {
        ports_[ingress]->set_paused(pkt.kind == PacketKind::PfcPause);
        return;
    }
    const std::uint16_t egress = route(pkt);
    if (egress == UINT16_MAX) {
        net_.record_drop(*ports_[ingress], pkt, DropReason::LinkDown);
        return;
    }
    enqueue(egress, std::move(pkt), ingress);
}

EnqueueOutcome Switch::enqueue(std::uint16_t egress, Packet&& pkt, std::uint16_t ingress) {
    Port& out = *ports_[egress];
    if (out.failed()) {
        net_.record_drop(out, pkt, DropReason::LinkDown);
        return EnqueueOutcome::Dropped;
    }
    pkt.ingress_port = ingress;
    const bool data_class = !is_control(pkt.kind);
    const std::uint32_t size = pkt.size_bytes;
    EnqueueOutcome outcome = egress_[egress]->queue.enqueue(std::move(pkt));
    if (outcome == EnqueueOutcome::Dropped) {
        net_.record_drop(out, pkt, DropReason::Buffer);
        return outcome;
    }
    if (data_class) {
        out.note_arrival(size);
    }
    if (buffer_ && data_class) {
        buffer_->add(ingress, size);
        if (buffer_->used() > buffer_->total()) {
            ++net_.counters().shared_buffer_overruns;
        }
        const auto actions = buffer_->evaluate();
        for (const auto& a : actions) {
            if (a.pause) {
                outcome = EnqueueOutcome::PfcTriggered;
            }
        }
        apply_pfc(actions);
    }
    out.kick();
    return outcome;
}

void Switch::apply_pfc(const std::vector<PfcAction>& actions) {
    for (const auto& a : actions) {
        Packet frame;
        frame.kind = a.pause ? PacketKind::PfcPause : PacketKind::PfcResume;
        frame.size_bytes = net_.spec().control_bytes;
        egress_[a.ingress]->queue.enqueue(std::move(frame));
        net_.record_pfc(*ports_[a.ingress], a.pause);
        ports_[a.ingress]->kick();
    }
}

// ---------------------------------------------------------------- Host

Host::Host(Network& net, std::uint32_t index) : Node(NodeKind::Host, index), net_(net) {}

void Host::receive(Packet&& pkt, std::uint16_t) {
    if (pkt.kind == PacketKind::PfcPause || pkt.kind == PacketKind::PfcResume) {
        nic_->set_paused(pkt.kind == PacketKind::PfcPause);
        return;
    }
    if (pkt.kind == PacketKind::Data) {
        net_.counters().data_bytes_delivered += pkt.size_bytes;
    }
    if (net_.sink() != nullptr) {
        net_.sink()->deliver(std::move(pkt), index());
    }
}

std::optional<Packet> Host::next_packet(SimTime now, bool data_allowed) {
    if (!priority_.empty()) {
        Packet p = std::move(priority_.front());
        priority_.pop_front();
        return p;
    }
    if (!data_allowed) {
        return std::nullopt;
    }
    for (std::size_t n = ready_.size(); n > 0; --n) {
        TxSource* src = ready_.front();
        ready_.pop_front();
        std::optional<Packet> p = src->pull(now);
        if (p) {
            ready_.push_back(src);
            if (p->kind == PacketKind::Data) {
                net_.counters().data_bytes_injected += p->size_bytes;
            }
            return p;
        }
        src->queued_ = false;
    }
    return std::nullopt;
}

void Host::send_priority(Packet&& pkt) {
    priority_.push_back(std::move(pkt));
    nic_->kick();
}

void Host::wake(TxSource& src) {
    if (!src.queued_) {
        src.queued_ = true;
        ready_.push_back(&src);
    }
    nic_->kick();
}

// ---------------------------------------------------------------- Network

Network::Network(sim::Scheduler& sched, TopologySpec spec, FabricConfig fabric, std::uint64_t seed)
    : sched_(sched), spec_(std::move(spec)), fabric_(fabric), seed_(seed) {
    spec_.validate();
    link_latency_ = derive_link_latency(spec_);
    build();
}

void Network::build() {
    const std::uint32_t hpt = spec_.hosts_per_tor();
    auto limits_for = [&](LinkRate rate) {
        const auto bdp = static_cast<double>(bdp_bytes(rate, spec_.net_base_rtt));
        QueueLimits q;
        q.capacity_bytes = static_cast<std::uint64_t>(fabric_.drop_bdp * bdp);
        q.kmin_bytes = static_cast<std::uint64_t>(fabric_.kmin_bdp * bdp);
        q.kmax_bytes = static_cast<std::uint64_t>(fabric_.kmax_bdp * bdp);
        q.mode = fabric_.mode;
        return q;
    };

    for (std::uint32_t h = 0; h < spec_.hosts; ++h) {
        hosts_.push_back(std::make_unique<Host>(*this, h));
    }
    for (std::uint32_t t = 0; t < spec_.tors; ++t) {
        tors_.push_back(std::make_unique<Switch>(*this, NodeKind::Tor, t));
    }
    for (std::uint32_t s = 0; s < spec_.spines; ++s) {
        spines_.push_back(std::make_unique<Switch>(*this, NodeKind::Spine, s));
    }

    for (std::uint32_t h = 0; h < spec_.hosts; ++h) {
        Host& host = *hosts_[h];
        auto nic = std::make_unique<Port>(*this, host, 0, spec_.host_link_speed, link_latency_);
        nic->connect(*tors_[spec_.tor_of(h)], static_cast<std::uint16_t>(h % hpt));
        nic->set_source(host);
        host.attach_nic(std::move(nic));
    }
    for (std::uint32_t t = 0; t < spec_.tors; ++t) {
        Switch& tor = *tors_[t];
        for (std::uint32_t i = 0; i < hpt; ++i) {
            auto p = std::make_unique<Port>(*this, tor, static_cast<std::uint16_t>(i), spec_.host_link_speed,
                                            link_latency_);
            p->connect(*hosts_[t * hpt + i], 0);
            tor.add_port(std::move(p), limits_for(spec_.host_link_speed), seed_);
        }
        for (std::uint32_t s = 0; s < spec_.spines; ++s) {
            auto p = std::make_unique<Port>(*this, tor, static_cast<std::uint16_t>(hpt + s), spec_.uplink_speed,
                                            link_latency_);
            p->connect(*spines_[s], static_cast<std::uint16_t>(t));
            tor.add_port(std::move(p), limits_for(spec_.uplink_speed), seed_);
        }
        tor.init_shared_buffer(fabric_, spec_.mtu_bytes);
    }
    for (std::uint32_t s = 0; s < spec_.spines; ++s) {
        Switch& spine = *spines_[s];
        for (std::uint32_t t = 0; t < spec_.tors; ++t) {
            auto p = std::make_unique<Port>(*this, spine, static_cast<std::uint16_t>(t), spec_.uplink_speed,
                                            link_latency_);
            p->connect(*tors_[t], static_cast<std::uint16_t>(hpt + s));
            spine.add_port(std::move(p), limits_for(spec_.uplink_speed), seed_);
        }
        spine.init_shared_buffer(fabric_, spec_.mtu_bytes);
    }
    for (const auto& [t, s] : spec_.failed_links) {
        tors_[t]->fail_port(static_cast<std::uint16_t>(hpt + s));
        spines_[s]->fail_port(static_cast<std::uint16_t>(t));
    }
    recompute_eligible();
}

void Network::recompute_eligible() {
    const std::uint32_t hpt = spec_.hosts_per_tor();
    eligible_.assign(std::size_t{spec_.tors} * spec_.tors, {});
    for (std::uint32_t a = 0; a < spec_.tors; ++a) {
        for (std::uint32_t b = 0; b < spec_.tors; ++b) {
            if (a == b) {
                continue;
            }
            auto& list = eligible_[a * spec_.tors + b];
            for (std::uint32_t s = 0; s < spec_.spines; ++s) {
                if (spec_.link_alive(a, s) && spec_.link_alive(b, s)) {
                    list.push_back(static_cast<std::uint16_t>(hpt + s));
                }
            }
        }
    }
}

std::vector<Port*> Network::switch_ports() {
    std::vector<Port*> out;
    for (auto* group : {&tors_, &spines_}) {
        for (auto& sw : *group) {
            for (std::size_t i = 0; i < sw->port_count(); ++i) {
                out.push_back(&sw->port(static_cast<std::uint16_t>(i)));
            }
        }
    }
    return out;
}

Port& Network::last_hop_port(HostId host) {
    return tors_.at(spec_.tor_of(host))->port(static_cast<std::uint16_t>(host % spec_.hosts_per_tor()));
}

bool link_exists(const TopologySpec& spec, const LinkId& link) {
    if (link.from_kind == NodeKind::Host && link.to_kind == NodeKind::Tor) {
        return link.from < spec.hosts && spec.tor_of(link.from) == link.to;
    }
    if (link.from_kind == NodeKind::Tor && link.to_kind == NodeKind::Host) {
        return link.to < spec.hosts && spec.tor_of(link.to) == link.from;
    }
    if (link.from_kind == NodeKind::Tor && link.to_kind == NodeKind::Spine) {
        return link.from < spec.tors && link.to < spec.spines;
    }
    if (link.from_kind == NodeKind::Spine && link.to_kind == NodeKind::Tor) {
        return link.from < spec.spines && link.to < spec.tors;
    }
    return false;
}

Port& Network::link_port(const LinkId& link) {
    if (!link_exists(spec_, link)) {
        throw ConfigError("no such link: " + to_string(link));
    }
    const std::uint32_t hpt = spec_.hosts_per_tor();
    switch (link.from_kind) {
    case NodeKind::Host:
        return hosts_[link.from]->nic();
    case NodeKind::Tor:
        return link.to_kind == NodeKind::Host ? tors_[link.from]->port(static_cast<std::uint16_t>(link.to % hpt))
                                              : tors_[link.from]->port(static_cast<std::uint16_t>(hpt + link.to));
    case NodeKind::Spine:
        break;
    }
    return spines_[link.from]->port(static_cast<std::uint16_t>(link.to));
}

void Network::fail_link(std::uint32_t tor, std::uint32_t spine) {
    if (tor >= spec_.tors || spine >= spec_.spines) {
        throw ConfigError("fail_link: out of range");
    }
    spec_.failed_links.insert({tor, spine});
    tors_[tor]->fail_port(static_cast<std::uint16_t>(spec_.hosts_per_tor() + spine));
    spines_[spine]->fail_port(static_cast<std::uint16_t>(tor));
    recompute_eligible();
}

void Network::add_impairment(const LinkImpairment& imp, std::uint64_t seed) {
    if (imp.drop_rate < 0.0 || imp.drop_rate > 1.0) {
        throw ConfigError("impairment drop_rate must lie in [0, 1]");
    }
    link_port(imp.link).set_impairment(imp.drop_rate, imp.control_too, seed);
}

std::uint64_t Network::data_bytes_in_flight() {
    std::uint64_t total = 0;
    for (auto& h : hosts_) {
        total += h->nic().data_bytes_in_flight();
    }
    for (auto* group : {&tors_, &spines_}) {
        for (auto& sw : *group) {
            for (std::size_t i = 0; i < sw->port_count(); ++i) {
                const auto idx = static_cast<std::uint16_t>(i);
                total += sw->port(idx).data_bytes_in_flight() + sw->queue(idx).data_payload_bytes();
            }
        }
    }
    return total;
}

void Network::record_drop(const Port& port, const Packet& pkt, DropReason reason) {
    if (pkt.kind == PacketKind::Data) {
        counters_.data_bytes_dropped += pkt.size_bytes;
        ++counters_.data_packets_dropped;
        if (reason == DropReason::Buffer) {
            ++counters_.buffer_drops;
        } else if (reason == DropReason::Injected) {
            ++counters_.injected_drops;
        }
    }
    if (observer_ != nullptr) {
        observer_->on_drop(now(), port, pkt, reason);
    }
}

void Network::record_pfc(const Port& port, bool pause) {
    if (pause) {
        ++counters_.pfc_pauses;
    } else {
        ++counters_.pfc_resumes;
    }
    if (observer_ != nullptr) {
        observer_->on_pfc(now(), port, pause);
    }
}

}  // namespace strack::net
