#pragma once

#include "covert/detector.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace covert {

inline constexpr const char* kToolVersion = "covertsim 1.0.0";

struct DepPoint {
    double snr_w_db = 0.0;
    int obs_bits = 0;
    double dep = 1.0;        // raw Monte-Carlo estimate
    double threshold = 0.0;  // optimal DCS / energy threshold
    double ci_halfwidth = 0.0;
    double p_md = 0.0;
    double p_fa = 1.0;
};

/// Pool-adjacent-violators fit, non-increasing, equal weights.
std::vector<double> isotonic_non_increasing(std::vector<double> values);

/// DEP over an (SNR dB x observation bits) grid, raw and monotone-fitted.
/// Cell (i, j) pairs snr_grid_db[i] with obs_grid_bits[j]; storage is column
/// major, index j * snr_count + i.
struct CalibrationTable {
    DetectorKind detector = DetectorKind::cycle;
    DetectorModel model;
    std::vector<double> snr_grid_db;
    std::vector<int> obs_grid_bits;
    std::vector<DepPoint> raw;
    std::vector<double> fitted;
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t snr_count() const { return snr_grid_db.size(); }
    std::size_t obs_count() const { return obs_grid_bits.size(); }
    std::size_t index(std::size_t snr_i, std::size_t obs_j) const { return obs_j * snr_count() + snr_i; }
    double fit(std::size_t snr_i, std::size_t obs_j) const { return fitted[index(snr_i, obs_j)]; }

    /// Isotonic regression along SNR, then along observation length.
    void refit();
    void validate() const;
};

/// Canonical description of the detector and waveform template; equal
/// fingerprints mean interchangeable tables.
nlohmann::json fingerprint(DetectorKind kind, const DetectorModel& model);
std::string fingerprint_hash(DetectorKind kind, const DetectorModel& model);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Monte-Carlo DEP on every grid cell, then the monotone fit. Cell (i, j)
/// draws from derive_seed(seed, i, j); raw points departing from the fit by
/// more than twice their CI are listed in `warnings`.
CalibrationTable calibrate(DetectorKind kind, const DetectorModel& model, std::vector<double> snr_grid_db,
                           std::vector<int> obs_grid_bits, int trials, std::uint64_t seed,
                           const ProgressFn& progress = {});

/// Cells whose raw DEP departs from the fitted value by more than 2 x CI.
std::vector<std::size_t> monotonicity_violations(const CalibrationTable& table);

struct DepLookup {
    double dep = 1.0;
    bool extrapolated = false;  // observation longer than the calibrated grid
    bool clamped = false;       // SNR or observation outside the grid, held at the edge
};

/// Bilinear interpolation of the fit in (SNR dB, log2 bits). Beyond the
/// longest calibrated observation the iso-DEP contours of the last two
/// columns are continued linearly in log2 bits.
DepLookup dep_lookup(const CalibrationTable& table, double snr_w, double obs_bits);

struct SnrLimit {
    double snr_w = 0.0;         // linear
    bool extrapolated = false;
    bool clamped = false;       // requirement met across the whole grid; value is the grid edge
};

/// Largest SNR at Willie whose fitted DEP still meets dep_reqd. Throws
/// InfeasibleError when dep_reqd exceeds the DEP reachable at the lowest
/// calibrated SNR.
SnrLimit invert_dep(const CalibrationTable& table, double dep_reqd, double obs_bits);

nlohmann::json to_json(const CalibrationTable& table);
CalibrationTable calibration_from_json(const nlohmann::json& doc);
void save_calibration(const std::string& path, const CalibrationTable& table);
CalibrationTable load_calibration(const std::string& path);

/// File name under which a table with this fingerprint is stored.
std::string calibration_file_name(DetectorKind kind, const DetectorModel& model);

}  // namespace covert
