#pragma once

#include "covert/cyclo.hpp"
#include "covert/dsss.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace covert {

enum class DetectorKind { cycle, energy };

std::string to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

/// Everything about Willie's observation that shapes the statistic
/// distributions. Two calibrations are interchangeable iff these match.
struct DetectorModel {
    DsssParams waveform = DsssParams::make(7);
    std::uint64_t code_seed = 1;
    int bit_harmonics = 4;   // K_b
    int chip_harmonics = 2;  // K_c
    /// SCF smoothing window in units of the bit rate 1/Tb. A window of
    /// obs_bits observed bits spans round(this * obs_bits) DFT bins.
    double scf_smoothing_bit_rates = 1.0;
    /// Willie's noise floor is known only to within +-this many dB; each
    /// observation draws its actual level uniformly in dB from that range.
    double noise_uncertainty_db = 0.0;

    void validate() const;
};

/// Sorted test statistics under H0 (noise only) and H1 (signal plus noise).
struct TrialStatistics {
    std::vector<double> h0;
    std::vector<double> h1;
    int trials = 0;
    double snr_w = 0.0;
    int obs_bits = 0;
};

/// Mean power of the window restricted to the occupied band |f| <= (1+beta)/(2 Tc).
double energy_statistic(std::span<const double> samples, const DsssParams& params);

std::size_t scf_smoothing_bins(const DetectorModel& model, std::size_t window_samples);

/// Smoothed-SCF DCS of the window over the model's cycle set.
double cycle_statistic(std::span<const double> samples, const DetectorModel& model);

/// Monte-Carlo draws of Willie's statistic. SNR at Willie follows the raw
/// (undespread) definition P |h|^2 / (N0 Omega). Trial k of hypothesis h uses
/// the RNG stream derive_seed(seed, h, k).
TrialStatistics run_trials(DetectorKind kind, const DetectorModel& model, double snr_w, int obs_bits,
                           int trials, std::uint64_t seed);

struct ThresholdChoice {
    double threshold = 0.0;  // decide H1 when statistic > threshold
    double dep = 1.0;        // P_MD + P_FA at that threshold
    double p_md = 0.0;
    double p_fa = 1.0;
};

/// Exhaustive search over every distinct threshold interval of the pooled
/// samples (midpoints plus the two infinite ends). Ties keep the smaller threshold.
ThresholdChoice optimize_threshold(const TrialStatistics& stats);

/// 95% normal-approximation half-width of the empirical P_MD + P_FA.
double dep_ci_halfwidth(const ThresholdChoice& choice, int trials);

}  // namespace covert
