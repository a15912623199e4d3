#pragma once

#include <stdexcept>
#include <string>

namespace covert {

// Every conversion between logarithmic and linear quantities goes through
// these helpers so that unit handling lives in one place.
double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

/// Bit error rate of coherent antipodal signalling, Q(sqrt(2 snr)).
double ber(double snr);

/// Inverse of ber(): the SNR at which ber(snr) == target. Bisection on the
/// monotone curve; target must lie in (0, 0.5].
double snr_for_ber(double target);

inline constexpr double kSpeedOfLight = 299792458.0;

// Failure classes. The CLI maps each to its own exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DisconnectedError : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};

struct MissingCalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace covert
