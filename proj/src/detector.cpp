#include "covert/detector.hpp"

#include "covert/parallel.hpp"
#include "covert/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace covert {

std::string to_string(DetectorKind kind)
{
    return kind == DetectorKind::cycle ? "cycle" : "energy";
}

DetectorKind parse_detector_kind(std::string_view name)
{
    if (name == "cycle")
        return DetectorKind::cycle;
    if (name == "energy")
        return DetectorKind::energy;
    throw ConfigError("unknown detector '" + std::string(name) + "' (expected cycle or energy)");
}

void DetectorModel::validate() const
{
    waveform.validate();
    if (waveform.code != spreading_code(waveform.spreading_length, code_seed))
        throw ConfigError("detector model: spreading code does not match code_seed");
    if (bit_harmonics < 0 || chip_harmonics < 0 || bit_harmonics + chip_harmonics == 0)
        throw ConfigError("detector model: need at least one cycle harmonic");
    if (!(scf_smoothing_bit_rates >= 0.0))
        throw ConfigError("detector model: smoothing width must be non-negative");
    if (!(noise_uncertainty_db >= 0.0 && noise_uncertainty_db < 20.0))
        throw ConfigError("detector model: noise uncertainty must be in [0, 20) dB");
}

double energy_statistic(std::span<const double> samples, const DsssParams& params)
{
    double df = 0.0;
    const auto power = power_spectrum(samples, params.sample_rate(), df);
    const double edge = params.band_edge_hz();
    const long offset = static_cast<long>(power.size() / 2);
    const long limit = static_cast<long>(std::floor(edge / df + 1e-9));
    double in_band = 0.0;
    for (long k = -limit; k <= limit; ++k) {
        const long m = k + offset;
        if (m >= 0 && m < static_cast<long>(power.size()))
            in_band += power[static_cast<std::size_t>(m)];
    }
    const double t0 = 1.0 / df;
    return in_band * df / t0;
}

std::size_t scf_smoothing_bins(const DetectorModel& model, std::size_t window_samples)
{
    const double bits = static_cast<double>(window_samples) / static_cast<double>(model.waveform.samples_per_bit());
    return static_cast<std::size_t>(std::max(1.0, std::round(model.scf_smoothing_bit_rates * bits)));
}

double cycle_statistic(std::span<const double> samples, const DetectorModel& model)
{
    const Spectrum spectrum = finite_time_spectrum(samples, model.waveform.sample_rate());
    const auto cycles = make_cycle_set(model.waveform, model.bit_harmonics, model.chip_harmonics);
    const auto shifts = cycle_shifts(cycles, spectrum.resolution_hz, spectrum.size());
    return smoothed_dcs(spectrum, shifts, scf_smoothing_bins(model, samples.size()));
}

TrialStatistics run_trials(DetectorKind kind, const DetectorModel& model, double snr_w, int obs_bits,
                           int trials, std::uint64_t seed)
{
    if (trials < 2)
        throw std::invalid_argument("run_trials: need at least two trials");
    if (obs_bits < 8)
        throw std::invalid_argument("run_trials: observation must cover at least 8 bits");
    if (!(snr_w > 0.0))
        throw std::invalid_argument("run_trials: snr_w must be positive");
    model.validate();

    const DsssParams& wf = model.waveform;
    // Unit received power; the noise density sets the SNR at Willie.
    const double n0 = 1.0 / (snr_w * wf.chip_rate_hz);
    const std::size_t guard =
        static_cast<std::size_t>((wf.span_chips / 2 + wf.spreading_length - 1) / wf.spreading_length) + 1;
    const std::size_t window = static_cast<std::size_t>(obs_bits) * wf.samples_per_bit();
    const double rho = model.noise_uncertainty_db;

    TrialStatistics stats;
    stats.trials = trials;
    stats.snr_w = snr_w;
    stats.obs_bits = obs_bits;
    stats.h0.resize(static_cast<std::size_t>(trials));
    stats.h1.resize(static_cast<std::size_t>(trials));

    auto statistic = [&](std::span<const double> x) {
        return kind == DetectorKind::cycle ? cycle_statistic(x, model) : energy_statistic(x, wf);
    };

    parallel_for(2 * static_cast<std::size_t>(trials), [&](std::size_t job) {
        const std::size_t hypothesis = job % 2;
        const std::size_t trial = job / 2;
        std::mt19937_64 rng(derive_seed(seed, hypothesis, trial));
        double noise_scale = 1.0;
        if (rho > 0.0)
            noise_scale = db_to_linear(std::uniform_real_distribution<double>(-rho, rho)(rng));

        std::vector<double> samples;
        if (hypothesis == 1) {
            const auto bits = random_bits(static_cast<std::size_t>(obs_bits) + 2 * guard, rng);
            const Waveform w = synthesize(wf, bits, 1.0);
            samples = observation_window(w, wf, guard, static_cast<std::size_t>(obs_bits));
        } else {
            samples.assign(window, 0.0);
        }
        Waveform noisy{std::move(samples), wf.sample_rate()};
        add_awgn(noisy, n0 * noise_scale, rng);
        const double value = statistic(noisy.samples);
        (hypothesis == 0 ? stats.h0 : stats.h1)[trial] = value;
    });

    std::sort(stats.h0.begin(), stats.h0.end());
    std::sort(stats.h1.begin(), stats.h1.end());
    return stats;
}

ThresholdChoice optimize_threshold(const TrialStatistics& stats)
{
    if (stats.h0.empty() || stats.h1.empty())
        throw std::invalid_argument("optimize_threshold: empty statistics");
    struct Sample {
        double value;
        bool signal;
    };
    std::vector<Sample> pooled;
    pooled.reserve(stats.h0.size() + stats.h1.size());
    for (double v : stats.h0)
        pooled.push_back({v, false});
    for (double v : stats.h1)
        pooled.push_back({v, true});
    std::sort(pooled.begin(), pooled.end(), [](const Sample& a, const Sample& b) { return a.value < b.value; });

    const double n0 = static_cast<double>(stats.h0.size());
    const double n1 = static_cast<double>(stats.h1.size());
    // Threshold below everything: every observation is declared H1.
    std::size_t false_alarms = stats.h0.size();
    std::size_t misses = 0;
    ThresholdChoice best;
    best.threshold = -std::numeric_limits<double>::infinity();
    best.p_fa = 1.0;
    best.p_md = 0.0;
    best.dep = 1.0;

    std::size_t i = 0;
    while (i < pooled.size()) {
        const double v = pooled[i].value;
        while (i < pooled.size() && pooled[i].value == v) {
            if (pooled[i].signal)
                ++misses;
            else
                --false_alarms;
            ++i;
        }
        const double threshold =
            i < pooled.size() ? v + (pooled[i].value - v) / 2.0 : std::numeric_limits<double>::infinity();
        const double p_md = static_cast<double>(misses) / n1;
        const double p_fa = static_cast<double>(false_alarms) / n0;
        const double dep = p_md + p_fa;
        if (dep < best.dep) {
            best = {threshold, dep, p_md, p_fa};
        }
    }
    best.dep = std::clamp(best.dep, 0.0, 1.0);
    return best;
}

double dep_ci_halfwidth(const ThresholdChoice& choice, int trials)
{
    const double n = static_cast<double>(trials);
    const double var = choice.p_md * (1.0 - choice.p_md) / n + choice.p_fa * (1.0 - choice.p_fa) / n;
    return 1.96 * std::sqrt(var);
}

}  // namespace covert
