#pragma once

#include "covert/dsss.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace covert {

/// Cycle frequencies examined by the detector, in Hz, ascending, all nonzero.
struct CycleSet {
    std::vector<double> alphas;
};

/// {k / Tb : 1 <= k <= bit_harmonics} U {k / Tc : 1 <= k <= chip_harmonics},
/// restricted to (0, fs / 2).
CycleSet make_cycle_set(const DsssParams& params, int bit_harmonics = 4, int chip_harmonics = 2);

/// Finite-time spectrum Y(f) = dt * sum x[n] exp(-j 2 pi f n dt), stored with
/// frequencies ascending: bins[m] sits at (m - first_bin_offset()) * resolution.
struct Spectrum {
    std::vector<std::complex<double>> bins;
    double resolution_hz = 0.0;  // 1 / T0
    double sample_rate = 0.0;

    std::size_t size() const { return bins.size(); }
    long first_bin_offset() const { return static_cast<long>(bins.size() / 2); }
    double frequency(std::size_t m) const
    {
        return (static_cast<double>(m) - static_cast<double>(first_bin_offset())) * resolution_hz;
    }
    double observation_time() const { return 1.0 / resolution_hz; }
};

Spectrum finite_time_spectrum(std::span<const double> samples, double sample_rate);
inline Spectrum finite_time_spectrum(const Waveform& w) { return finite_time_spectrum(w.samples, w.sample_rate); }

/// |Y(f)|^2 on the same grid as `spectrum.bins`, computed without keeping the
/// complex values.
std::vector<double> power_spectrum(std::span<const double> samples, double sample_rate, double& resolution_hz);

struct ScfEntry {
    double alpha_hz = 0.0;      // snapped to shift_bins * resolution
    long shift_bins = 0;
    double first_frequency_hz = 0.0;  // frequency label of values[0]
    std::vector<std::complex<double>> values;  // Y(f - alpha/2) Y*(f + alpha/2)
};

/// Cyclic periodogram at alpha = 0 (first entry) and at each cycle frequency.
struct ScfEstimate {
    std::vector<ScfEntry> entries;
    double frequency_resolution_hz = 0.0;
    double observation_time_s = 0.0;
    std::vector<double> excluded_alphas;  // alpha >= fs, dropped
};

/// Each alpha is snapped to the nearest multiple of the bin spacing a * df.
/// The product pairs bin m with bin m + a; its frequency label is
/// (m + a/2) * df, so odd a simply lands on a half-bin label.
ScfEstimate estimate_scf(const Spectrum& spectrum, const CycleSet& cycles);

/// Frequency-smoothed SCF: a moving average of `width_bins` consecutive
/// cyclic-periodogram values (only full windows are kept). Width 1 returns
/// the raw estimate. Averaging is what lets the incoherent noise products
/// cancel while the signal's coherent spectral correlation survives.
ScfEstimate smooth_scf(const ScfEstimate& raw, std::size_t width_bins);

/// Integer bin shift per cycle frequency, dropping alphas at or above fs.
std::vector<long> cycle_shifts(const CycleSet& cycles, double resolution_hz, std::size_t bin_count);

/// Degree of cyclostationarity: sum over alpha != 0 of the SCF energy divided
/// by the alpha = 0 energy. Throws std::domain_error for an all-zero input.
double dcs(const ScfEstimate& scf);

/// dcs(smooth_scf(estimate_scf(spectrum, shifts), width)) in one pass with
/// prefix sums; no intermediate estimate is materialised.
double smoothed_dcs(const Spectrum& spectrum, std::span<const long> shifts, std::size_t width_bins);

}  // namespace covert
