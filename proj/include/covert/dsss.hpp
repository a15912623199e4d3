#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace covert {

/// Baseband DSSS waveform template. Time is anchored by the chip rate, which
/// also equals the occupied bandwidth Omega = 1/Tc.
struct DsssParams {
    int spreading_length = 7;   // L, chips per bit
    double chip_rate_hz = 1e7;  // 1 / Tc
    double rolloff = 1.0;       // beta
    int samples_per_chip = 4;
    int span_chips = 8;         // RRC truncation
    std::vector<int> code;      // L entries of +-1

    double chip_duration() const { return 1.0 / chip_rate_hz; }
    double bit_duration() const { return spreading_length / chip_rate_hz; }
    double sample_rate() const { return samples_per_chip * chip_rate_hz; }
    std::size_t samples_per_bit() const
    {
        return static_cast<std::size_t>(spreading_length) * static_cast<std::size_t>(samples_per_chip);
    }
    /// One-sided edge of the RRC spectrum, (1 + beta) / (2 Tc).
    double band_edge_hz() const { return (1.0 + rolloff) * chip_rate_hz / 2.0; }

    void validate() const;

    /// Template with the default code family for `spreading_length`.
    static DsssParams make(int spreading_length, int samples_per_chip = 4, double rolloff = 1.0,
                           std::uint64_t code_seed = 1, double chip_rate_hz = 1e7, int span_chips = 8);
};

/// Maximal-length sequence of length 2^degree - 1 mapped to +-1 (bit 1 -> -1).
std::vector<int> m_sequence(int degree);

/// m-sequence when L = 2^k - 1 (k in 2..16), otherwise a seeded random +-1 code.
std::vector<int> spreading_code(int length, std::uint64_t seed);

/// Root-raised-cosine value at t (in chip durations), before normalization.
/// Removable singularities at t = 0 and |t| = 1/(4 beta) use the limit forms.
double rrc_value(double t_chips, double beta);

/// RRC taps spanning `span_chips` chips, sampled at samples_per_chip per chip,
/// scaled so the pulse energy is 1/L in bit-time units: sum(taps^2) * dt = 1/L
/// with dt = 1 / (L * samples_per_chip). A chip stream built from these taps
/// therefore has unit mean power.
std::vector<double> rrc_pulse(double beta, int span_chips, int samples_per_chip, int spreading_length);

struct Waveform {
    std::vector<double> samples;
    double sample_rate = 1.0;
};

/// Superposition of chip pulses weighted by amplitude * bit * code chip.
/// Output length is bits * L * spc + (span * spc); the leading and trailing
/// span/2 chips are filter transients.
Waveform synthesize(const DsssParams& params, std::span<const int> bits, double amplitude);

/// Adds i.i.d. Gaussian noise with per-sample variance n0 / 2 * sample_rate,
/// so the noise power inside a bandwidth B (two-sided 2B) is n0 * B.
void add_awgn(Waveform& waveform, double n0_w_per_hz, std::mt19937_64& rng);
Waveform add_awgn(const Waveform& waveform, double n0_w_per_hz, std::uint64_t seed);

/// Samples covering exactly `obs_bits` bit periods, starting at the pulse
/// centre of the first chip of bit `lead_bits`.
std::vector<double> observation_window(const Waveform& waveform, const DsssParams& params,
                                       std::size_t lead_bits, std::size_t obs_bits);

std::vector<int> random_bits(std::size_t count, std::mt19937_64& rng);

}  // namespace covert
