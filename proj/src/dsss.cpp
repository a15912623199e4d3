#include "covert/dsss.hpp"

#include "covert/units.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace covert {

void DsssParams::validate() const
{
    if (spreading_length < 1)
        throw ConfigError("spreading length must be positive");
    if (!(chip_rate_hz > 0.0))
        throw ConfigError("chip rate must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0))
        throw ConfigError("rolloff must be in [0, 1]");
    if (samples_per_chip < static_cast<int>(std::ceil(2.0 * (1.0 + rolloff))))
        throw ConfigError("samples_per_chip below 2 (1 + rolloff)");
    if (span_chips < 4 || span_chips % 2 != 0)
        throw ConfigError("pulse span must be an even number of chips >= 4");
    if (code.size() != static_cast<std::size_t>(spreading_length))
        throw ConfigError("spreading code length " + std::to_string(code.size()) + " != L " +
                          std::to_string(spreading_length));
    for (int c : code)
        if (c != 1 && c != -1)
            throw ConfigError("spreading code entries must be +-1");
}

DsssParams DsssParams::make(int spreading_length, int samples_per_chip, double rolloff,
                            std::uint64_t code_seed, double chip_rate_hz, int span_chips)
{
    DsssParams p;
    p.spreading_length = spreading_length;
    p.samples_per_chip = samples_per_chip;
    p.rolloff = rolloff;
    p.chip_rate_hz = chip_rate_hz;
    p.span_chips = span_chips;
    p.code = spreading_code(spreading_length, code_seed);
    p.validate();
    return p;
}

std::vector<int> m_sequence(int degree)
{
    // Fibonacci LFSR feedback taps of primitive polynomials.
    static const std::vector<std::vector<int>> taps = {
        {},          {},           {2, 1},         {3, 2},          {4, 3},         {5, 3},
        {6, 5},      {7, 6},       {8, 6, 5, 4},   {9, 5},          {10, 7},        {11, 9},
        {12, 11, 10, 4}, {13, 12, 11, 8}, {14, 13, 12, 2}, {15, 14}, {16, 15, 13, 4},
    };
    if (degree < 2 || degree >= static_cast<int>(taps.size()))
        throw std::invalid_argument("m_sequence: degree must be in [2, 16]");
    const std::size_t length = (std::size_t{1} << degree) - 1;
    std::uint32_t state = 1;
    std::vector<int> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        const int bit = static_cast<int>(state & 1u);
        out.push_back(bit ? -1 : 1);
        std::uint32_t feedback = 0;
        for (int t : taps[static_cast<std::size_t>(degree)])
            feedback ^= (state >> (degree - t)) & 1u;
        state = (state >> 1) | (feedback << (degree - 1));
    }
    return out;
}

std::vector<int> spreading_code(int length, std::uint64_t seed)
{
    if (length < 1)
        throw std::invalid_argument("spreading_code: length must be positive");
    for (int k = 2; k <= 16; ++k)
        if (length == (1 << k) - 1)
            return m_sequence(k);
    std::mt19937_64 rng(seed);
    std::vector<int> code(static_cast<std::size_t>(length));
    for (auto& c : code)
        c = (rng() & 1u) ? 1 : -1;
    return code;
}

double rrc_value(double t, double beta)
{
    constexpr double pi = std::numbers::pi;
    constexpr double eps = 1e-9;
    if (std::abs(t) < eps)
        return 1.0 - beta + 4.0 * beta / pi;
    if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < eps) {
        return beta / std::numbers::sqrt2 *
               ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
    }
    const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
    const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    return num / den;
}

std::vector<double> rrc_pulse(double beta, int span_chips, int samples_per_chip, int spreading_length)
{
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("rrc_pulse: beta must be in [0, 1]");
    if (span_chips < 4)
        throw std::invalid_argument("rrc_pulse: span must be at least 4 chips");
    if (samples_per_chip < 1 || spreading_length < 1)
        throw std::invalid_argument("rrc_pulse: samples_per_chip and L must be positive");

    const int half = span_chips * samples_per_chip / 2;
    std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
    for (int k = -half; k <= half; ++k)
        taps[static_cast<std::size_t>(k + half)] = rrc_value(static_cast<double>(k) / samples_per_chip, beta);
    // Mirror so the even symmetry is exact in floating point.
    for (int k = 1; k <= half; ++k)
        taps[static_cast<std::size_t>(half - k)] = taps[static_cast<std::size_t>(half + k)];

    double energy = 0.0;
    for (double v : taps)
        energy += v * v;
    const double dt = 1.0 / (static_cast<double>(spreading_length) * samples_per_chip);
    const double scale = std::sqrt((1.0 / spreading_length) / (energy * dt));
    for (double& v : taps)
        v *= scale;
    return taps;
}

Waveform synthesize(const DsssParams& params, std::span<const int> bits, double amplitude)
{
    params.validate();
    if (bits.empty())
        throw std::invalid_argument("synthesize: no bits");
    const auto taps = rrc_pulse(params.rolloff, params.span_chips, params.samples_per_chip, params.spreading_length);
    const std::size_t spc = static_cast<std::size_t>(params.samples_per_chip);
    const std::size_t chips = bits.size() * static_cast<std::size_t>(params.spreading_length);

    Waveform w;
    w.sample_rate = params.sample_rate();
    w.samples.assign(chips * spc + taps.size() - 1, 0.0);
    std::size_t chip = 0;
    for (int b : bits) {
        if (b != 1 && b != -1)
            throw std::invalid_argument("synthesize: bits must be +-1");
        for (int c : params.code) {
            const double weight = amplitude * b * c;
            double* out = w.samples.data() + chip * spc;
            for (std::size_t k = 0; k < taps.size(); ++k)
                out[k] += weight * taps[k];
            ++chip;
        }
    }
    return w;
}

void add_awgn(Waveform& waveform, double n0_w_per_hz, std::mt19937_64& rng)
{
    if (n0_w_per_hz < 0.0)
        throw std::invalid_argument("add_awgn: negative noise density");
    if (n0_w_per_hz == 0.0)
        return;
    std::normal_distribution<double> gauss(0.0, std::sqrt(n0_w_per_hz / 2.0 * waveform.sample_rate));
    for (double& s : waveform.samples)
        s += gauss(rng);
}

Waveform add_awgn(const Waveform& waveform, double n0_w_per_hz, std::uint64_t seed)
{
    Waveform out = waveform;
    std::mt19937_64 rng(seed);
    add_awgn(out, n0_w_per_hz, rng);
    return out;
}

std::vector<double> observation_window(const Waveform& waveform, const DsssParams& params,
                                       std::size_t lead_bits, std::size_t obs_bits)
{
    const std::size_t start = lead_bits * params.samples_per_bit() +
                              static_cast<std::size_t>(params.span_chips * params.samples_per_chip / 2);
    const std::size_t length = obs_bits * params.samples_per_bit();
    if (start + length > waveform.samples.size())
        throw std::out_of_range("observation window exceeds waveform");
    return {waveform.samples.begin() + static_cast<std::ptrdiff_t>(start),
            waveform.samples.begin() + static_cast<std::ptrdiff_t>(start + length)};
}

std::vector<int> random_bits(std::size_t count, std::mt19937_64& rng)
{
    std::vector<int> bits(count);
    for (auto& b : bits)
        b = (rng() >> 63) ? 1 : -1;
    return bits;
}

}  // namespace covert
