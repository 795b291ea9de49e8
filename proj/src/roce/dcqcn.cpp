#include "strack/roce/dcqcn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace strack::roce {

void DcqcnParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw std::invalid_argument(std::string("invalid dcqcn parameter: ") + what);
        }
    };
    require(g > 0.0 && g < 1.0, "g");
    require(cnp_interval >= SimTime::zero(), "cnp_interval");
    require(alpha_timer > SimTime::zero() && rate_timer > SimTime::zero(), "timers");
    require(byte_counter > 0, "byte_counter");
    require(fast_recovery_steps > 0, "fast_recovery_steps");
    require(rai_fraction > 0.0 && rhai_fraction > 0.0, "increase steps");
    require(min_rate_fraction > 0.0 && min_rate_fraction <= 1.0, "min_rate_fraction");
}

Dcqcn::Dcqcn(LinkRate line_rate, DcqcnParams params)
    : p_(params), line_(static_cast<double>(line_rate.bps)), rc_(line_), rt_(line_) {}

void Dcqcn::on_cnp(SimTime now) {
    advance(now);
    ++cnps_;
    rt_ = rc_;
    rc_ = std::max(rc_ * (1.0 - alpha_ / 2.0), line_ * p_.min_rate_fraction);
    alpha_ = (1.0 - p_.g) * alpha_ + p_.g;
    active_ = true;
    alpha_anchor_ = now;
    rate_anchor_ = now;
    bytes_since_ = 0;
    timer_count_ = 0;
    byte_count_ = 0;
}

void Dcqcn::increase(bool from_timer) {
    // stage is decided by the epochs completed before this one
    const std::uint32_t f = p_.fast_recovery_steps;
    if (std::max(timer_count_, byte_count_) < f) {
        // fast recovery: move halfway back to the target
    } else if (std::min(timer_count_, byte_count_) > f) {
        rt_ += (std::min(timer_count_, byte_count_) - f) * p_.rhai_fraction * line_;
    } else {
        rt_ += p_.rai_fraction * line_;
    }
    rt_ = std::min(rt_, line_);
    rc_ = std::min((rt_ + rc_) / 2.0, line_);
    if (from_timer) {
        ++timer_count_;
    } else {
        ++byte_count_;
    }
    if (rc_ >= line_ * (1.0 - 1e-9)) {
        rc_ = line_;
        rt_ = line_;
        active_ = false;
    }
}

void Dcqcn::advance(SimTime now) {
    if (!active_) {
        return;
    }
    if (now - alpha_anchor_ >= p_.alpha_timer) {
        const std::int64_t k = (now - alpha_anchor_).ps() / p_.alpha_timer.ps();
        alpha_ *= std::pow(1.0 - p_.g, static_cast<double>(k));
        alpha_anchor_ += p_.alpha_timer * k;
    }
    while (active_ && now - rate_anchor_ >= p_.rate_timer) {
        rate_anchor_ += p_.rate_timer;
        increase(true);
    }
}

void Dcqcn::on_bytes_sent(std::uint64_t bytes, SimTime now) {
    advance(now);
    if (!active_) {
        return;
    }
    bytes_since_ += bytes;
    while (active_ && bytes_since_ >= p_.byte_counter) {
        bytes_since_ -= p_.byte_counter;
        increase(false);
    }
}

std::vector<std::uint64_t> qp_stripe(std::uint64_t packets, std::uint32_t qps) {
    if (qps == 0) {
        throw std::invalid_argument("qp_stripe: qps must be positive");
    }
    std::vector<std::uint64_t> out(qps, packets / qps);
    for (std::uint64_t i = 0; i < packets % qps; ++i) {
        ++out[i];
    }
    return out;
}

}  // namespace strack::roce
