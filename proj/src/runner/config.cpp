#include "strack/runner/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace strack::runner {

using nlohmann::json;

TransportKind parse_transport(const std::string& s) {
    if (s == "strack") {
        return TransportKind::Strack;
    }
    if (s == "strack_oblivious_spray") {
        return TransportKind::StrackOblivious;
    }
    if (s == "rocev2") {
        return TransportKind::Rocev2;
    }
    throw ConfigError("transport: unknown value '" + s + "' (strack, strack_oblivious_spray, rocev2)");
}

std::string to_string(TransportKind t) {
    switch (t) {
    case TransportKind::Strack: return "strack";
    case TransportKind::StrackOblivious: return "strack_oblivious_spray";
    case TransportKind::Rocev2: return "rocev2";
    }
    return "unknown";
}

std::uint64_t parse_size(const json& v, const std::string& key) {
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() < 0) {
            throw ConfigError(key + ": size must be non-negative");
        }
        return v.get<std::uint64_t>();
    }
    if (!v.is_string()) {
        throw ConfigError(key + ": expected a size such as 16MB or an integer byte count");
    }
    const std::string s = v.get<std::string>();
    std::size_t pos = 0;
    while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
        ++pos;
    }
    if (pos == 0) {
        throw ConfigError(key + ": cannot parse size '" + s + "'");
    }
    const double num = std::strtod(s.substr(0, pos).c_str(), nullptr);
    std::string unit = s.substr(pos);
    while (!unit.empty() && unit.front() == ' ') {
        unit.erase(unit.begin());
    }
    double mult = 0;
    if (unit.empty() || unit == "B") {
        mult = 1;
    } else if (unit == "KB") {
        mult = 1e3;
    } else if (unit == "MB") {
        mult = 1e6;
    } else if (unit == "GB") {
        mult = 1e9;
    } else if (unit == "KiB") {
        mult = 1024.0;
    } else if (unit == "MiB") {
        mult = 1024.0 * 1024.0;
    } else if (unit == "GiB") {
        mult = 1024.0 * 1024.0 * 1024.0;
    } else {
        throw ConfigError(key + ": unknown size unit '" + unit + "' (B, KB, MB, GB, KiB, MiB, GiB)");
    }
    const double bytes = num * mult;
    if (bytes != std::floor(bytes)) {
        throw ConfigError(key + ": size '" + s + "' is not a whole number of bytes");
    }
    return static_cast<std::uint64_t>(bytes);
}

namespace {

/// Reads one JSON object and remembers which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError((path_.empty() ? std::string("config") : path_) + ": expected an object");
        }
    }

    bool has(const std::string& k) const { return j_.contains(k); }
    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    const json* get(const std::string& k) {
        used_.insert(k);
        auto it = j_.find(k);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& k, double def) {
        const json* v = get(k);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_number()) {
            throw ConfigError(key(k) + ": expected a number");
        }
        return v->get<double>();
    }

    std::uint64_t uint(const std::string& k, std::uint64_t def) {
        const json* v = get(k);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
            throw ConfigError(key(k) + ": expected a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    std::uint32_t u32(const std::string& k, std::uint32_t def) {
        const std::uint64_t v = uint(k, def);
        if (v > 0xffffffffULL) {
            throw ConfigError(key(k) + ": value too large");
        }
        return static_cast<std::uint32_t>(v);
    }

    bool boolean(const std::string& k, bool def) {
        const json* v = get(k);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_boolean()) {
            throw ConfigError(key(k) + ": expected true or false");
        }
        return v->get<bool>();
    }

    std::string string(const std::string& k, const std::string& def) {
        const json* v = get(k);
        if (v == nullptr) {
            return def;
        }
        if (!v->is_string()) {
            throw ConfigError(key(k) + ": expected a string");
        }
        return v->get<std::string>();
    }

    std::uint64_t size(const std::string& k, std::uint64_t def) {
        const json* v = get(k);
        return v == nullptr ? def : parse_size(*v, key(k));
    }

    SimTime micros(const std::string& k, SimTime def) {
        const double us = number(k, def.us());
        if (!(us >= 0.0) || !std::isfinite(us)) {
            throw ConfigError(key(k) + ": expected a non-negative time in microseconds");
        }
        return sim::from_us(us);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.contains(it.key())) {
                throw ConfigError("unknown key '" + key(it.key()) + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void parse_topology(Reader r, TopologyConfig& t) {
    t.hosts = r.u32("hosts", t.hosts);
    t.hosts_per_tor = r.u32("hosts_per_tor", t.hosts_per_tor);
    t.spines = r.u32("spines", t.spines);
    t.host_link_gbps = r.number("host_link_gbps", t.host_link_gbps);
    t.oversub = r.u32("oversub", t.oversub);
    t.net_base_rtt_us = r.number("net_base_rtt_us", t.net_base_rtt_us);
    t.mtu = r.u32("mtu", t.mtu);
    t.control_bytes = r.u32("control_bytes", t.control_bytes);
    t.failed_uplinks_per_tor = r.u32("failed_uplinks_per_tor", t.failed_uplinks_per_tor);
    if (const json* fl = r.get("failed_links")) {
        if (!fl->is_array()) {
            throw ConfigError(r.key("failed_links") + ": expected a list of [tor, spine] pairs");
        }
        for (const auto& e : *fl) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned()) {
                throw ConfigError(r.key("failed_links") + ": each entry must be [tor, spine]");
            }
            t.failed_links.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
        }
    }
    r.finish();
}

void parse_fabric(Reader r, RunConfig& c) {
    c.fabric_mode = r.string("mode", c.fabric_mode);
    if (c.fabric_mode != "auto" && c.fabric_mode != "lossy" && c.fabric_mode != "lossless") {
        throw ConfigError(r.key("mode") + ": expected auto, lossy or lossless");
    }
    const bool lossless = c.fabric_mode == "lossless" ||
                          (c.fabric_mode == "auto" && c.transport == TransportKind::Rocev2);
    c.fabric.mode = lossless ? net::BufferMode::Lossless : net::BufferMode::Lossy;
    // RoCE marks at one BDP, step function; STrack uses the 25% / 75% ramp.
    const bool roce = c.transport == TransportKind::Rocev2;
    c.fabric.kmin_bdp = r.number("kmin_bdp", roce ? 1.0 : 0.25);
    c.fabric.kmax_bdp = r.number("kmax_bdp", roce ? 1.0 : 0.75);
    c.fabric.drop_bdp = r.number("drop_bdp", c.fabric.drop_bdp);
    c.fabric.pfc_alpha = r.number("pfc_alpha", c.fabric.pfc_alpha);
    c.fabric.pfc_hysteresis_mtus = r.u32("pfc_hysteresis_mtus", c.fabric.pfc_hysteresis_mtus);
    r.finish();
    c.fabric_mode = lossless ? "lossless" : "lossy";
}

void parse_cc(Reader r, transport::CcParams& p) {
    p.target_qdelay = r.micros("target_qdelay_us", p.target_qdelay);
    p.target_qhigh = r.micros("target_qhigh_us", p.target_qhigh);
    p.ewma = r.number("ewma", p.ewma);
    p.bdp_sf = r.number("bdp_sf", p.bdp_sf);
    p.delay_sf = r.number("delay_sf", p.delay_sf);
    p.beta = r.number("beta_bytes", p.beta);
    p.eta = r.number("eta_bytes", p.eta);
    // stored per picosecond, configured per microsecond
    p.alpha = r.number("alpha_bytes_per_us", p.alpha * 1e6) / 1e6;
    p.gamma = r.number("gamma", p.gamma);
    p.max_cwnd = r.number("max_cwnd_bytes", p.max_cwnd);
    p.max_paths = r.u32("max_paths", p.max_paths);
    p.min_ooo_threshold = r.u32("min_ooo_threshold", p.min_ooo_threshold);
    p.probe_multiplier = r.u32("probe_multiplier", p.probe_multiplier);
    p.rto = r.micros("rto_us", p.rto);
    p.coalesce_bytes = static_cast<std::uint32_t>(r.size("coalesce_bytes", p.coalesce_bytes));
    p.window_packets = r.u32("window_packets", p.window_packets);
    p.bitmap_reset_rtts = r.u32("bitmap_reset_rtts", p.bitmap_reset_rtts);
    r.finish();
}

void parse_roce(Reader r, roce::RoceParams& p) {
    p.rto = r.micros("rto_us", p.rto);
    p.ack_coalesce_bytes = static_cast<std::uint32_t>(r.size("ack_coalesce_bytes", p.ack_coalesce_bytes));
    if (const json* d = r.get("dcqcn")) {
        Reader q(*d, r.key("dcqcn"));
        auto& x = p.dcqcn;
        x.g = q.number("g", x.g);
        x.cnp_interval = q.micros("cnp_interval_us", x.cnp_interval);
        x.alpha_timer = q.micros("alpha_timer_us", x.alpha_timer);
        x.rate_timer = q.micros("rate_timer_us", x.rate_timer);
        x.byte_counter = q.size("byte_counter", x.byte_counter);
        x.fast_recovery_steps = q.u32("fast_recovery_steps", x.fast_recovery_steps);
        x.rai_fraction = q.number("rai_fraction", x.rai_fraction);
        x.rhai_fraction = q.number("rhai_fraction", x.rhai_fraction);
        x.min_rate_fraction = q.number("min_rate_fraction", x.min_rate_fraction);
        q.finish();
    }
    r.finish();
}

void parse_workload(Reader r, WorkloadConfig& w) {
    const std::string type = r.string("type", "permutation");
    if (type == "permutation") {
        w.type = WorkloadType::Permutation;
        w.msg_size = r.size("msg_size", w.msg_size);
    } else if (type == "incast") {
        w.type = WorkloadType::Incast;
        w.msg_size = r.size("msg_size", w.msg_size);
        w.fanin = r.u32("fanin", w.fanin);
        w.dst = r.u32("dst", w.dst);
        w.spread_tors = r.boolean("spread_tors", w.spread_tors);
    } else if (type == "collective") {
        w.type = WorkloadType::Collective;
        try {
            w.algo = workload::parse_algo(r.string("algo", "ring"));
        } catch (const std::exception& e) {
            throw ConfigError(r.key("algo") + ": " + e.what());
        }
        w.jobs = r.u32("jobs", w.jobs);
        w.ranks = r.u32("ranks", w.ranks);
        w.collective_bytes = r.size("collective_bytes", w.collective_bytes);
        w.chunk_bytes = r.size("chunk_bytes", w.chunk_bytes);
        w.parallel_degree = r.u32("parallel_degree", w.parallel_degree);
    } else if (type == "trace") {
        w.type = WorkloadType::Trace;
        w.path = r.string("path", "");
    } else {
        throw ConfigError(r.key("type") + ": unknown workload '" + type +
                          "' (permutation, incast, collective, trace)");
    }
    r.finish();
}

void parse_impairments(Reader r, RunConfig& c) {
    if (const json* drops = r.get("link_drops")) {
        if (!drops->is_array()) {
            throw ConfigError(r.key("link_drops") + ": expected a list");
        }
        for (std::size_t i = 0; i < drops->size(); ++i) {
            Reader d((*drops)[i], r.key("link_drops") + "[" + std::to_string(i) + "]");
            net::LinkImpairment imp;
            try {
                imp.link = net::parse_link(d.string("link", ""));
            } catch (const std::exception& e) {
                throw ConfigError(d.key("link") + ": " + e.what());
            }
            imp.drop_rate = d.number("rate", 0.0);
            imp.control_too = d.boolean("control_too", false);
            d.finish();
            c.link_drops.push_back(imp);
        }
    }
    if (const json* fails = r.get("link_failures")) {
        if (!fails->is_array()) {
            throw ConfigError(r.key("link_failures") + ": expected a list");
        }
        for (std::size_t i = 0; i < fails->size(); ++i) {
            Reader f((*fails)[i], r.key("link_failures") + "[" + std::to_string(i) + "]");
            LinkFailure lf;
            lf.tor = f.u32("tor", 0);
            lf.spine = f.u32("spine", 0);
            lf.at_us = f.number("at_us", 0.0);
            f.finish();
            c.link_failures.push_back(lf);
        }
    }
    r.finish();
}

void parse_telemetry(Reader r, telemetry::TelemetryConfig& t) {
    t.sample_interval = r.micros("sample_interval_us", t.sample_interval);
    t.qdelay_threshold = r.micros("qdelay_threshold_us", t.qdelay_threshold);
    t.full_logging = r.boolean("full_logging", t.full_logging);
    t.tput_window = r.micros("tput_window_us", t.tput_window);
    const std::string scope = r.string("queue_scope", t.scope == telemetry::QueueScope::LastHop ? "last_hop" : "all");
    if (scope == "all") {
        t.scope = telemetry::QueueScope::AllSwitchPorts;
    } else if (scope == "last_hop") {
        t.scope = telemetry::QueueScope::LastHop;
    } else {
        throw ConfigError(r.key("queue_scope") + ": expected all or last_hop");
    }
    r.finish();
}

}  // namespace

net::TopologySpec RunConfig::topology_spec() const {
    const auto& t = topology;
    if (t.hosts_per_tor == 0) {
        throw ConfigError("topology.hosts_per_tor must be positive");
    }
    const double bps = t.host_link_gbps * 1e9;
    if (!(bps > 0) || bps != std::floor(bps)) {
        throw ConfigError("topology.host_link_gbps must be a positive whole number of bit/s");
    }
    auto spec = net::TopologySpec::fat_tree(t.hosts, t.hosts_per_tor, t.spines,
                                            sim::LinkRate{static_cast<std::int64_t>(bps)}, t.oversub);
    if (t.hosts % t.hosts_per_tor != 0) {
        throw ConfigError("topology.hosts must be a multiple of topology.hosts_per_tor");
    }
    spec.net_base_rtt = sim::from_us(t.net_base_rtt_us);
    spec.mtu_bytes = t.mtu;
    spec.control_bytes = t.control_bytes;
    for (const auto& f : t.failed_links) {
        spec.failed_links.insert(f);
    }
    if (t.failed_uplinks_per_tor > 0) {
        for (const auto& f : net::random_uplink_failures(spec, t.failed_uplinks_per_tor, seed)) {
            spec.failed_links.insert(f);
        }
    }
    return spec;
}

RunConfig parse_config(const json& j) {
    Reader r(j, "");
    RunConfig c;
    c.seed = r.uint("seed", c.seed);
    c.transport = parse_transport(r.string("transport", to_string(c.transport)));
    c.qps_per_conn = r.u32("qps_per_conn", c.qps_per_conn);
    if (const json* t = r.get("topology")) {
        parse_topology(Reader(*t, "topology"), c.topology);
    }
    parse_fabric(Reader(r.has("fabric") ? *r.get("fabric") : json::object(), "fabric"), c);

    const auto spec = c.topology_spec();
    c.cc = transport::CcParams::derive(spec.host_link_speed, spec.net_base_rtt, spec.mtu_bytes);
    c.cc.control_bytes = spec.control_bytes;
    if (const json* cc = r.get("cc")) {
        parse_cc(Reader(*cc, "cc"), c.cc);
    }
    c.roce.qps_per_conn = c.qps_per_conn;
    c.roce.mtu = spec.mtu_bytes;
    c.roce.control_bytes = spec.control_bytes;
    c.roce.ack_coalesce_bytes = 4 * spec.mtu_bytes;
    if (const json* rc = r.get("roce")) {
        parse_roce(Reader(*rc, "roce"), c.roce);
    }
    if (const json* w = r.get("workload")) {
        parse_workload(Reader(*w, "workload"), c.workload);
    }
    if (const json* imp = r.get("impairments")) {
        parse_impairments(Reader(*imp, "impairments"), c);
    }
    if (const json* t = r.get("telemetry")) {
        parse_telemetry(Reader(*t, "telemetry"), c.telemetry);
    }
    c.output_dir = r.string("output_dir", c.output_dir);
    c.stop_at_us = r.number("stop_at_us", c.stop_at_us);
    r.finish();
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

void validate(const RunConfig& c) {
    const auto spec = c.topology_spec();
    spec.validate();
    auto wrap = [](const char* section, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string(section) + ": " + e.what());
        }
    };
    wrap("cc", [&] { c.cc.validate(); });
    wrap("roce", [&] { c.roce.validate(); });
    if (c.transport != TransportKind::Rocev2 && c.qps_per_conn != 1) {
        throw ConfigError("qps_per_conn: STrack uses one connection per host pair; only rocev2 accepts >1");
    }
    if (c.fabric.kmin_bdp < 0 || c.fabric.kmax_bdp < c.fabric.kmin_bdp) {
        throw ConfigError("fabric.kmin_bdp/kmax_bdp: need 0 <= kmin <= kmax");
    }
    if (c.fabric.drop_bdp <= 0) {
        throw ConfigError("fabric.drop_bdp must be positive");
    }
    if (!(c.fabric.pfc_alpha > 0)) {
        throw ConfigError("fabric.pfc_alpha must be positive");
    }

    const auto& w = c.workload;
    switch (w.type) {
    case WorkloadType::Permutation:
        if (w.msg_size == 0) {
            throw ConfigError("workload.msg_size must be positive");
        }
        break;
    case WorkloadType::Incast:
        if (w.msg_size == 0) {
            throw ConfigError("workload.msg_size must be positive");
        }
        if (w.dst >= spec.hosts) {
            throw ConfigError("workload.dst is outside the topology");
        }
        if (w.fanin == 0 || w.fanin >= spec.hosts) {
            throw ConfigError("workload.fanin must lie in [1, hosts - 1]");
        }
        break;
    case WorkloadType::Collective: {
        if (w.jobs == 0 || static_cast<std::uint64_t>(w.jobs) * w.ranks > spec.hosts) {
            throw ConfigError("workload.jobs * workload.ranks exceeds the host count");
        }
        workload::CollectiveSpec cs;
        cs.algo = w.algo;
        cs.ranks = w.ranks;
        cs.collective_bytes = w.collective_bytes;
        cs.chunk_bytes = w.chunk_bytes;
        cs.parallel_degree = w.parallel_degree;
        wrap("workload", [&] { cs.validate(); });
        break;
    }
    case WorkloadType::Trace:
        if (w.path.empty()) {
            throw ConfigError("workload.path is required for trace workloads");
        }
        break;
    }

    for (const auto& d : c.link_drops) {
        if (!(d.drop_rate >= 0.0 && d.drop_rate <= 1.0)) {
            throw ConfigError("impairments.link_drops: rate must lie in [0, 1]");
        }
        if (!net::link_exists(spec, d.link)) {
            throw ConfigError("impairments.link_drops: link " + net::to_string(d.link) + " is not in the topology");
        }
    }
    for (const auto& f : c.link_failures) {
        if (f.tor >= spec.tors || f.spine >= spec.spines) {
            throw ConfigError("impairments.link_failures: tor/spine out of range");
        }
        if (f.at_us < 0) {
            throw ConfigError("impairments.link_failures: at_us must be non-negative");
        }
    }
    if (c.telemetry.sample_interval <= SimTime::zero() || c.telemetry.tput_window <= SimTime::zero()) {
        throw ConfigError("telemetry: sample_interval_us and tput_window_us must be positive");
    }
    if (!(c.stop_at_us > 0)) {
        throw ConfigError("stop_at_us must be positive");
    }
    if (c.output_dir.empty()) {
        throw ConfigError("output_dir must not be empty");
    }
}

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["transport"] = to_string(c.transport);
    j["qps_per_conn"] = c.qps_per_conn;
    const auto& t = c.topology;
    json failed = json::array();
    for (const auto& [tor, spine] : t.failed_links) {
        failed.push_back({tor, spine});
    }
    j["topology"] = {{"hosts", t.hosts},
                     {"hosts_per_tor", t.hosts_per_tor},
                     {"spines", t.spines},
                     {"host_link_gbps", t.host_link_gbps},
                     {"oversub", t.oversub},
                     {"net_base_rtt_us", t.net_base_rtt_us},
                     {"mtu", t.mtu},
                     {"control_bytes", t.control_bytes},
                     {"failed_links", failed},
                     {"failed_uplinks_per_tor", t.failed_uplinks_per_tor}};
    j["fabric"] = {{"mode", c.fabric_mode},
                   {"kmin_bdp", c.fabric.kmin_bdp},
                   {"kmax_bdp", c.fabric.kmax_bdp},
                   {"drop_bdp", c.fabric.drop_bdp},
                   {"pfc_alpha", c.fabric.pfc_alpha},
                   {"pfc_hysteresis_mtus", c.fabric.pfc_hysteresis_mtus}};
    const auto& p = c.cc;
    j["cc"] = {{"target_qdelay_us", p.target_qdelay.us()},
               {"target_qhigh_us", p.target_qhigh.us()},
               {"ewma", p.ewma},
               {"bdp_sf", p.bdp_sf},
               {"delay_sf", p.delay_sf},
               {"beta_bytes", p.beta},
               {"eta_bytes", p.eta},
               {"alpha_bytes_per_us", p.alpha * 1e6},
               {"gamma", p.gamma},
               {"max_cwnd_bytes", p.max_cwnd},
               {"max_paths", p.max_paths},
               {"min_ooo_threshold", p.min_ooo_threshold},
               {"probe_multiplier", p.probe_multiplier},
               {"rto_us", p.rto.us()},
               {"coalesce_bytes", p.coalesce_bytes},
               {"window_packets", p.window_packets},
               {"bitmap_reset_rtts", p.bitmap_reset_rtts}};
    const auto& d = c.roce.dcqcn;
    j["roce"] = {{"rto_us", c.roce.rto.us()},
                 {"ack_coalesce_bytes", c.roce.ack_coalesce_bytes},
                 {"dcqcn",
                  {{"g", d.g},
                   {"cnp_interval_us", d.cnp_interval.us()},
                   {"alpha_timer_us", d.alpha_timer.us()},
                   {"rate_timer_us", d.rate_timer.us()},
                   {"byte_counter", d.byte_counter},
                   {"fast_recovery_steps", d.fast_recovery_steps},
                   {"rai_fraction", d.rai_fraction},
                   {"rhai_fraction", d.rhai_fraction},
                   {"min_rate_fraction", d.min_rate_fraction}}}};
    const auto& w = c.workload;
    switch (w.type) {
    case WorkloadType::Permutation:
        j["workload"] = {{"type", "permutation"}, {"msg_size", w.msg_size}};
        break;
    case WorkloadType::Incast:
        j["workload"] = {{"type", "incast"},
                         {"msg_size", w.msg_size},
                         {"fanin", w.fanin},
                         {"dst", w.dst},
                         {"spread_tors", w.spread_tors}};
        break;
    case WorkloadType::Collective:
        j["workload"] = {{"type", "collective"},
                         {"algo", workload::to_string(w.algo)},
                         {"jobs", w.jobs},
                         {"ranks", w.ranks},
                         {"collective_bytes", w.collective_bytes},
                         {"chunk_bytes", w.chunk_bytes},
                         {"parallel_degree", w.parallel_degree}};
        break;
    case WorkloadType::Trace:
        j["workload"] = {{"type", "trace"}, {"path", w.path}};
        break;
    }
    json drops = json::array();
    for (const auto& imp : c.link_drops) {
        drops.push_back({{"link", net::to_string(imp.link)}, {"rate", imp.drop_rate}, {"control_too", imp.control_too}});
    }
    json fails = json::array();
    for (const auto& f : c.link_failures) {
        fails.push_back({{"tor", f.tor}, {"spine", f.spine}, {"at_us", f.at_us}});
    }
    j["impairments"] = {{"link_drops", drops}, {"link_failures", fails}};
    const auto& tm = c.telemetry;
    j["telemetry"] = {{"sample_interval_us", tm.sample_interval.us()},
                      {"qdelay_threshold_us", tm.qdelay_threshold.us()},
                      {"full_logging", tm.full_logging},
                      {"tput_window_us", tm.tput_window.us()},
                      {"queue_scope", tm.scope == telemetry::QueueScope::LastHop ? "last_hop" : "all"}};
    j["output_dir"] = c.output_dir;
    j["stop_at_us"] = c.stop_at_us;
    return j;
}

std::filesystem::path resolve_output_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("STRACK_SIM_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
            return std::filesystem::path(root) / p;
        }
    }
    return p;
}

}  // namespace strack::runner
