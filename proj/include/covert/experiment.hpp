#pragma once

#include "covert/calibration.hpp"
#include "covert/routing.hpp"
#include "covert/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace covert {

inline constexpr const char* kSweepCsvHeader =
    "swept_param,swept_value,detector,e2e_latency_s,e2e_dep,dep_extrapolated,hop_count,bottleneck_theta_db,status";
inline constexpr const char* kSweepDetailCsvHeader =
    "swept_param,swept_value,detector,hop_count,max_spreading_gain,route_nodes,status";

/// Directories searched for calibration tables: the config's calibration
/// dir (if any), then `out_dir`.
std::vector<std::filesystem::path> calibration_search_dirs(const ScenarioConfig& cfg,
                                                           const std::filesystem::path& out_dir);

/// Loads the table matching the scenario's fingerprint. Returns nothing when
/// no table for `kind` exists; throws MissingCalibrationError when tables for
/// `kind` exist but none matches the fingerprint.
std::optional<CalibrationTable> find_calibration(const ScenarioConfig& cfg, DetectorKind kind,
                                                 const std::vector<std::filesystem::path>& dirs);

CalibrationTable require_calibration(const ScenarioConfig& cfg, DetectorKind kind,
                                     const std::vector<std::filesystem::path>& dirs);

CalibrationTable calibrate_scenario(const ScenarioConfig& cfg, DetectorKind kind, const ProgressFn& progress = {});

/// Builds the hop graph for `c` and solves the route of `mode`.
Route run_route(const Topology& topo, const Constraints& c, AllocationMode mode, const CalibrationTable* table);

struct SweepRow {
    SweepParam param = SweepParam::dep_reqd;
    double value = 0.0;
    DetectorKind detector = DetectorKind::cycle;
    std::string status = "ok";  // ok, infeasible, disconnected
    std::optional<double> e2e_latency_s;
    std::optional<double> e2e_dep;
    bool dep_extrapolated = false;
    std::size_t hop_count = 0;
    std::optional<double> bottleneck_theta_db;
    std::optional<double> max_spreading_gain;
    std::vector<std::size_t> route_nodes;
    std::string message;
};

Constraints with_swept_value(Constraints c, SweepParam param, double value);

/// One routing solve per (detector, grid value); rows come back detector by
/// detector, each in grid order. Infeasible points become rows, not errors.
std::vector<SweepRow> run_sweep(const Topology& topo, const Constraints& base, AllocationMode mode,
                                const SweepSpec& sweep, const std::map<DetectorKind, CalibrationTable>& tables);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_sweep_detail_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace covert
