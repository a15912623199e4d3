#include "covert/hop_alloc.hpp"

#include "covert/units.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace covert {

namespace {

bool positive_finite(double x)
{
    return std::isfinite(x) && x > 0.0;
}

bool close(double a, double b, double rel = 1e-9)
{
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

void check_gains(const LinkGains& g)
{
    if (!positive_finite(g.rx) || !positive_finite(g.willie))
        throw InfeasibleError("link gain must be positive and finite");
}

}  // namespace

double Constraints::ber_reqd() const
{
    return ber(snr_reqd);
}

void Constraints::validate() const
{
    auto need = [](bool ok, const char* what) {
        if (!ok)
            throw ConfigError(std::string("constraints: ") + what);
    };
    need(positive_finite(d_reqd_bps), "d_reqd must be positive");
    need(positive_finite(snr_reqd), "snr_reqd must be positive");
    need(dep_reqd > 0.0 && dep_reqd < 1.0, "dep_reqd must lie in (0, 1)");
    need(positive_finite(omega_max_hz), "omega_max must be positive");
    need(positive_finite(p_max_w), "p_max must be positive");
    need(positive_finite(n0_w_per_hz), "n0 must be positive");
    need(positive_finite(m_bits), "m_bits must be positive");
}

std::string to_string(AllocationMode mode)
{
    return mode == AllocationMode::covert_max ? "covert_max" : "latency_min";
}

std::pair<double, double> snr_pair(double power_w, double bandwidth_hz, double spreading_gain, double gain_rx,
                                   double gain_willie, double n0_w_per_hz)
{
    const double noise = n0_w_per_hz * bandwidth_hz;
    return {power_w * gain_rx * spreading_gain / noise, power_w * gain_willie / noise};
}

HopAllocation allocate_covert_max(const LinkGains& gains, const Constraints& c)
{
    check_gains(gains);
    HopAllocation a;
    a.mode = AllocationMode::covert_max;
    a.bandwidth_hz = c.omega_max_hz;
    a.spreading_gain = c.omega_max_hz / c.d_reqd_bps;
    if (a.spreading_gain < 1.0)
        throw InfeasibleError("required data rate exceeds the available bandwidth (spreading gain below 1)");
    a.data_rate_bps = c.d_reqd_bps;
    const double noise = c.n0_w_per_hz * c.omega_max_hz;
    a.power_w = c.snr_reqd / gains.rx * noise / a.spreading_gain;
    if (a.power_w > c.p_max_w) {
        std::ostringstream msg;
        msg << "power " << a.power_w << " W needed for Bob's SNR exceeds p_max " << c.p_max_w << " W";
        throw InfeasibleError(msg.str());
    }
    a.snr_rx = c.snr_reqd;
    a.snr_willie = a.power_w * gains.willie / noise;
    a.theta = gains.rx / gains.willie * a.spreading_gain;
    a.latency_s = c.m_bits / c.d_reqd_bps;
    return a;
}

HopAllocation allocate_latency_min(const LinkGains& gains, const Constraints& c, double snr_willie_max)
{
    check_gains(gains);
    if (!positive_finite(snr_willie_max))
        throw InfeasibleError("Willie SNR cap must be positive");
    HopAllocation a;
    a.mode = AllocationMode::latency_min;
    a.snr_willie_max = snr_willie_max;
    a.bandwidth_hz = c.omega_max_hz;
    const double noise = c.n0_w_per_hz * c.omega_max_hz;
    const double covert_power = snr_willie_max * noise / gains.willie;
    a.power_w = std::min(c.p_max_w, covert_power);
    a.power_capped = c.p_max_w < covert_power;
    const double snr_w_eff = a.power_w * gains.willie / noise;
    a.latency_s = c.m_bits * (c.snr_reqd / snr_w_eff) * (gains.willie / gains.rx) / c.omega_max_hz;
    a.spreading_gain = c.omega_max_hz * a.latency_s / c.m_bits;
    if (a.spreading_gain < 1.0) {
        a.gain_clamped = true;
        a.spreading_gain = 1.0;
        a.latency_s = c.m_bits / c.omega_max_hz;
        a.power_w = c.snr_reqd * noise / gains.rx;
    }
    a.data_rate_bps = c.omega_max_hz / a.spreading_gain;
    std::tie(a.snr_rx, a.snr_willie) =
        snr_pair(a.power_w, a.bandwidth_hz, a.spreading_gain, gains.rx, gains.willie, c.n0_w_per_hz);
    a.theta = a.snr_rx / a.snr_willie;
    return a;
}

bool AllocationReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const AllocationCheck& c) { return c.passed; });
}

std::vector<std::string> AllocationReport::failures() const
{
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (!c.passed)
            out.push_back(c.name);
    return out;
}

nlohmann::json AllocationReport::to_json() const
{
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : checks)
        list.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"ok", ok()}, {"checks", list}};
}

AllocationReport verify_allocation(const HopAllocation& alloc, const Constraints& c, const LinkGains& gains)
{
    AllocationReport report;
    auto add = [&](std::string name, bool passed, double actual, double limit) {
        std::ostringstream d;
        d.precision(12);
        d << "value " << actual << ", reference " << limit;
        report.checks.push_back({std::move(name), passed, d.str()});
    };

    const double p = alloc.power_w;
    const double omega = alloc.bandwidth_hz;
    const double eta = alloc.spreading_gain;
    const bool inputs_ok = positive_finite(p) && positive_finite(omega) && positive_finite(eta) &&
                           positive_finite(gains.rx) && positive_finite(gains.willie);
    report.checks.push_back({"inputs", inputs_ok, "power, bandwidth, spreading gain and gains must be positive"});
    if (!inputs_ok)
        return report;

    const auto [snr_rx, snr_w] = snr_pair(p, omega, eta, gains.rx, gains.willie, c.n0_w_per_hz);
    const double rate = omega / eta;
    const double latency = c.m_bits / rate;

    add("power_budget", p <= c.p_max_w * (1.0 + 1e-12), p, c.p_max_w);
    add("bandwidth_budget", omega <= c.omega_max_hz * (1.0 + 1e-12), omega, c.omega_max_hz);
    add("spreading_gain", eta >= 1.0 - 1e-12, eta, 1.0);
    add("data_rate_consistent", close(alloc.data_rate_bps, rate), alloc.data_rate_bps, rate);
    add("latency_consistent", close(alloc.latency_s, latency), alloc.latency_s, latency);
    add("snr_rx_consistent", close(alloc.snr_rx, snr_rx), alloc.snr_rx, snr_rx);
    add("snr_willie_consistent", close(alloc.snr_willie, snr_w), alloc.snr_willie, snr_w);
    add("theta_consistent", close(alloc.theta, snr_rx / snr_w), alloc.theta, snr_rx / snr_w);

    const double ber_now = ber(snr_rx);
    const double ber_limit = c.ber_reqd();
    add("ber", ber_now <= ber_limit * (1.0 + 1e-9), ber_now, ber_limit);

    if (alloc.mode == AllocationMode::covert_max) {
        add("snr_rx_equality", close(snr_rx, c.snr_reqd), snr_rx, c.snr_reqd);
        add("data_rate_requirement", rate >= c.d_reqd_bps * (1.0 - 1e-12), rate, c.d_reqd_bps);
    } else {
        const bool have_cap = alloc.snr_willie_max.has_value();
        const double cap = have_cap ? *alloc.snr_willie_max : 0.0;
        add("snr_willie_cap", have_cap && snr_w <= cap * (1.0 + 1e-9), snr_w, cap);
    }
    return report;
}

}  // namespace covert
