#pragma once

#include "json.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace covert {

/// Network-wide QoS and budget limits, all in linear SI units.
struct Constraints {
    double d_reqd_bps = 2.5e6;
    double snr_reqd = 10.0;        // Bob's despread SNR target (linear)
    double dep_reqd = 0.85;
    double omega_max_hz = 10e6;
    double p_max_w = 100.0;
    double n0_w_per_hz = 5.011872336272714e-15;  // -113 dBm/Hz
    double m_bits = 1e8;

    double ber_reqd() const;
    void validate() const;
};

/// Linear power gains |h|^2 from the transmitter to its receiver and to Willie.
struct LinkGains {
    double rx = 0.0;
    double willie = 0.0;
};

enum class AllocationMode { covert_max, latency_min };

std::string to_string(AllocationMode mode);

struct HopAllocation {
    AllocationMode mode = AllocationMode::covert_max;
    double power_w = 0.0;
    double bandwidth_hz = 0.0;
    double spreading_gain = 1.0;  // eta
    double data_rate_bps = 0.0;
    double latency_s = 0.0;
    double snr_rx = 0.0;
    double snr_willie = 0.0;
    double theta = 0.0;
    std::optional<double> snr_willie_max;  // latency mode: the detector-derived cap
    bool power_capped = false;             // latency mode: p_max was binding
    bool gain_clamped = false;             // latency mode: eta raised to 1
    std::optional<double> dep_estimate;
    bool dep_extrapolated = false;
};

/// (snr_rx, snr_willie) = (P g_rx eta / (N0 Omega), P g_w / (N0 Omega)).
std::pair<double, double> snr_pair(double power_w, double bandwidth_hz, double spreading_gain, double gain_rx,
                                   double gain_willie, double n0_w_per_hz);

/// Spreads the full band over the required rate and spends just enough power
/// for Bob's SNR. Throws InfeasibleError when D_reqd > Omega_max or the power
/// exceeds p_max.
HopAllocation allocate_covert_max(const LinkGains& gains, const Constraints& c);

/// Highest power allowed by Willie's SNR cap (and p_max), then the smallest
/// spreading gain meeting Bob's SNR. A gain below 1 is raised to 1 with the
/// power lowered to keep Bob exactly at target.
HopAllocation allocate_latency_min(const LinkGains& gains, const Constraints& c, double snr_willie_max);

struct AllocationCheck {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct AllocationReport {
    std::vector<AllocationCheck> checks;
    bool ok() const;
    std::vector<std::string> failures() const;
    nlohmann::json to_json() const;
};

/// Recomputes every derived quantity from (P, Omega, eta) and the gains, and
/// checks it against the stored values and the constraints of alloc.mode.
AllocationReport verify_allocation(const HopAllocation& alloc, const Constraints& c, const LinkGains& gains);

}  // namespace covert
