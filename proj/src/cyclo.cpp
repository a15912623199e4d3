#include "covert/cyclo.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace covert {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// FFTW planning is not thread-safe; execution with the new-array interface is.
fftw_plan r2c_plan(std::size_t n)
{
    thread_local std::map<std::size_t, Plan> cache;
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second.get();
    std::lock_guard lock(planner_mutex());
    std::vector<double> in(n);
    std::vector<fftw_complex> out(n / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr)
        throw std::runtime_error("fftw planning failed");
    cache.emplace(n, Plan(p));
    return p;
}

// Raw DFT of a real sequence, half spectrum (n / 2 + 1 bins).
std::vector<fftw_complex> real_dft(std::span<const double> samples)
{
    const std::size_t n = samples.size();
    std::vector<double> in(samples.begin(), samples.end());
    std::vector<fftw_complex> out(n / 2 + 1);
    fftw_execute_dft_r2c(r2c_plan(n), in.data(), out.data());
    return out;
}

}  // namespace

CycleSet make_cycle_set(const DsssParams& params, int bit_harmonics, int chip_harmonics)
{
    const double nyquist = params.sample_rate() / 2.0;
    std::vector<double> alphas;
    for (int k = 1; k <= bit_harmonics; ++k)
        alphas.push_back(k / params.bit_duration());
    for (int k = 1; k <= chip_harmonics; ++k)
        alphas.push_back(k / params.chip_duration());
    std::sort(alphas.begin(), alphas.end());
    CycleSet set;
    for (double a : alphas) {
        if (!(a > 0.0 && a < nyquist * (1.0 - 1e-12)))
            continue;
        if (!set.alphas.empty() && std::abs(a - set.alphas.back()) <= 1e-9 * a)
            continue;
        set.alphas.push_back(a);
    }
    return set;
}

Spectrum finite_time_spectrum(std::span<const double> samples, double sample_rate)
{
    if (samples.size() < 2)
        throw std::invalid_argument("finite_time_spectrum: need at least two samples");
    const std::size_t n = samples.size();
    const double dt = 1.0 / sample_rate;
    const auto half = real_dft(samples);

    Spectrum s;
    s.sample_rate = sample_rate;
    s.resolution_hz = sample_rate / static_cast<double>(n);
    s.bins.resize(n);
    const long offset = s.first_bin_offset();
    for (std::size_t m = 0; m < n; ++m) {
        const long k = static_cast<long>(m) - offset;  // signed frequency index
        const std::size_t idx = static_cast<std::size_t>(k >= 0 ? k : -k);
        std::complex<double> v(half[idx][0], half[idx][1]);
        if (k < 0)
            v = std::conj(v);
        s.bins[m] = dt * v;
    }
    return s;
}

std::vector<double> power_spectrum(std::span<const double> samples, double sample_rate, double& resolution_hz)
{
    if (samples.size() < 2)
        throw std::invalid_argument("power_spectrum: need at least two samples");
    const std::size_t n = samples.size();
    const double dt = 1.0 / sample_rate;
    const auto half = real_dft(samples);
    resolution_hz = sample_rate / static_cast<double>(n);
    std::vector<double> p(n);
    const long offset = static_cast<long>(n / 2);
    for (std::size_t m = 0; m < n; ++m) {
        const long k = static_cast<long>(m) - offset;
        const std::size_t idx = static_cast<std::size_t>(k >= 0 ? k : -k);
        p[m] = dt * dt * (half[idx][0] * half[idx][0] + half[idx][1] * half[idx][1]);
    }
    return p;
}

std::vector<long> cycle_shifts(const CycleSet& cycles, double resolution_hz, std::size_t bin_count)
{
    std::vector<long> shifts;
    const double fs = resolution_hz * static_cast<double>(bin_count);
    for (double a : cycles.alphas) {
        if (a >= fs)
            continue;
        const long shift = std::lround(a / resolution_hz);
        if (shift <= 0 || static_cast<std::size_t>(shift) >= bin_count)
            continue;
        shifts.push_back(shift);
    }
    return shifts;
}

ScfEstimate estimate_scf(const Spectrum& spectrum, const CycleSet& cycles)
{
    ScfEstimate est;
    est.frequency_resolution_hz = spectrum.resolution_hz;
    est.observation_time_s = spectrum.observation_time();
    const std::size_t n = spectrum.size();

    auto make_entry = [&](long shift) {
        ScfEntry e;
        e.shift_bins = shift;
        e.alpha_hz = static_cast<double>(shift) * spectrum.resolution_hz;
        e.first_frequency_hz = spectrum.frequency(0) + e.alpha_hz / 2.0;
        const std::size_t count = n - static_cast<std::size_t>(shift);
        e.values.resize(count);
        for (std::size_t m = 0; m < count; ++m)
            e.values[m] = spectrum.bins[m] * std::conj(spectrum.bins[m + static_cast<std::size_t>(shift)]);
        return e;
    };

    est.entries.push_back(make_entry(0));
    for (double a : cycles.alphas) {
        if (a >= spectrum.sample_rate) {
            est.excluded_alphas.push_back(a);
            continue;
        }
        const long shift = std::lround(a / spectrum.resolution_hz);
        if (shift <= 0 || static_cast<std::size_t>(shift) >= n) {
            est.excluded_alphas.push_back(a);
            continue;
        }
        est.entries.push_back(make_entry(shift));
    }
    return est;
}

ScfEstimate smooth_scf(const ScfEstimate& raw, std::size_t width_bins)
{
    if (width_bins == 0)
        throw std::invalid_argument("smooth_scf: zero smoothing width");
    if (width_bins == 1)
        return raw;
    ScfEstimate out = raw;
    const double inv = 1.0 / static_cast<double>(width_bins);
    for (auto& e : out.entries) {
        const auto& v = e.values;
        std::vector<std::complex<double>> smoothed;
        if (v.size() >= width_bins) {
            smoothed.resize(v.size() - width_bins + 1);
            std::complex<double> acc{};
            for (std::size_t m = 0; m < width_bins; ++m)
                acc += v[m];
            smoothed[0] = acc * inv;
            for (std::size_t m = 1; m < smoothed.size(); ++m) {
                acc += v[m + width_bins - 1] - v[m - 1];
                smoothed[m] = acc * inv;
            }
        }
        e.first_frequency_hz += (static_cast<double>(width_bins) - 1.0) / 2.0 * raw.frequency_resolution_hz;
        e.values = std::move(smoothed);
    }
    return out;
}

double dcs(const ScfEstimate& scf)
{
    if (scf.entries.empty() || scf.entries.front().shift_bins != 0)
        throw std::invalid_argument("dcs: estimate lacks the alpha = 0 entry");
    auto energy = [&](const ScfEntry& e) {
        double sum = 0.0;
        for (const auto& v : e.values)
            sum += std::norm(v);
        return sum * scf.frequency_resolution_hz;
    };
    const double denom = energy(scf.entries.front());
    if (!(denom > 0.0))
        throw std::domain_error("dcs: zero spectral energy at alpha = 0");
    double num = 0.0;
    for (std::size_t i = 1; i < scf.entries.size(); ++i)
        num += energy(scf.entries[i]);
    return num / denom;
}

double smoothed_dcs(const Spectrum& spectrum, std::span<const long> shifts, std::size_t width_bins)
{
    if (width_bins == 0)
        throw std::invalid_argument("smoothed_dcs: zero smoothing width");
    const std::size_t n = spectrum.size();
    std::vector<std::complex<double>> prefix;
    auto energy = [&](long shift) {
        const std::size_t s = static_cast<std::size_t>(shift);
        if (s >= n || n - s < width_bins)
            return 0.0;
        const std::size_t count = n - s;
        prefix.assign(count + 1, {});
        for (std::size_t m = 0; m < count; ++m)
            prefix[m + 1] = prefix[m] + spectrum.bins[m] * std::conj(spectrum.bins[m + s]);
        const double inv = 1.0 / static_cast<double>(width_bins);
        double sum = 0.0;
        for (std::size_t m = 0; m + width_bins <= count; ++m)
            sum += std::norm((prefix[m + width_bins] - prefix[m]) * inv);
        return sum * spectrum.resolution_hz;
    };
    const double denom = energy(0);
    if (!(denom > 0.0))
        throw std::domain_error("dcs: zero spectral energy at alpha = 0");
    double num = 0.0;
    for (long a : shifts)
        num += energy(a);
    return num / denom;
}

}  // namespace covert
