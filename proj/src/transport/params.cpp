#include "strack/transport/params.hpp"

#include <stdexcept>
#include <string>

namespace strack::transport {

CcParams CcParams::derive(LinkRate host_rate, SimTime net_base_rtt, std::uint32_t mtu) {
    CcParams p;
    p.net_base_rtt = net_base_rtt;
    p.target_qdelay = net_base_rtt;
    p.target_qhigh = net_base_rtt * 3;
    p.mtu = mtu;
    p.coalesce_bytes = 4 * mtu;

    const double bdp = static_cast<double>(sim::bytes_in(net_base_rtt, host_rate));
    const double ref_bdp = static_cast<double>(sim::bytes_in(sim::microseconds(12), sim::gbps(100)));
    p.bdp_sf = bdp / ref_bdp;
    p.delay_sf = net_base_rtt / sim::microseconds(12);
    p.beta = 5.0 * mtu * p.bdp_sf;
    p.eta = 0.15 * mtu * p.bdp_sf;
    p.alpha = 4.0 * p.bdp_sf * p.delay_sf * mtu / static_cast<double>(net_base_rtt.ps());
    p.max_cwnd = bdp;
    return p;
}

std::uint64_t CcParams::bdp() const { return static_cast<std::uint64_t>(max_cwnd); }

void CcParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw std::invalid_argument(std::string("invalid cc parameter: ") + what);
        }
    };
    require(net_base_rtt > SimTime::zero(), "net_base_rtt");
    require(target_qdelay > SimTime::zero(), "target_qdelay");
    require(target_qhigh > target_qdelay, "target_qhigh");
    require(ewma > 0.0 && ewma <= 1.0, "ewma");
    require(bdp_sf > 0.0 && delay_sf > 0.0, "scaling factors");
    require(beta > 0.0 && eta > 0.0 && alpha > 0.0, "beta/eta/alpha");
    require(gamma > 0.0 && gamma < 1.0, "gamma");
    require(mtu > 0, "mtu");
    require(max_cwnd >= mtu, "max_cwnd");
    require(max_paths >= 8 && max_paths <= 65536, "max_paths");
    require(min_ooo_threshold > 0, "min_ooo_threshold");
    require(probe_multiplier > 0, "probe_multiplier");
    require(rto > SimTime::zero(), "rto");
    require(coalesce_bytes > 0, "coalesce_bytes");
    require(window_packets >= 64 && window_packets % 64 == 0, "window_packets");
}

}  // namespace strack::transport
