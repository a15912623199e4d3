#pragma once

#include "covert/detector.hpp"
#include "covert/hop_alloc.hpp"
#include "covert/topology.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace covert {

struct TopologySpec {
    enum class Kind { grid, positions, random } kind = Kind::grid;
    int nx = 6;
    int ny = 6;
    double spacing_m = 50.0;
    std::vector<Vec3> nodes_m;    // positions
    std::size_t alice = 0;        // positions
    std::optional<std::size_t> bob;
    std::size_t random_nodes = 8;
    double area_m = 300.0;
    std::uint64_t random_seed = 1;
    Vec3 willie_m{75.0, 200.0, 0.0};
    PathLossModel path_loss = PathLossModel::with_free_space_reference(900e6);
    std::optional<double> max_link_distance_m;
    std::optional<std::filesystem::path> gain_csv;
};

struct CalibrationSpec {
    std::vector<double> snr_grid_db;
    std::vector<int> obs_grid_bits{16, 64, 256, 1024};
    int trials = 500;
    std::vector<DetectorKind> detectors{DetectorKind::cycle, DetectorKind::energy};
    std::optional<std::filesystem::path> dir;  // where route/sweep look for tables
};

enum class SweepParam { dep_reqd, m_bits, d_reqd_bps };

std::string to_string(SweepParam p);

struct SweepSpec {
    SweepParam param = SweepParam::dep_reqd;
    std::vector<double> values;
    std::vector<DetectorKind> detectors;
};

struct AllocateSpec {
    std::size_t tx = 0;
    std::size_t rx = 1;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    TopologySpec topology;
    Constraints constraints;
    AllocationMode mode = AllocationMode::covert_max;
    DetectorKind detector = DetectorKind::cycle;
    DetectorModel detector_model;
    CalibrationSpec calibration;
    std::optional<SweepSpec> sweep;
    AllocateSpec allocate;
    std::filesystem::path base_dir;  // relative paths resolve against this
};

/// Default SNR grid: -25 dB to +5 dB in 2.5 dB steps.
std::vector<double> default_snr_grid_db();

/// Parses a scenario document. Unknown keys, wrong types and out-of-range
/// values throw ConfigError naming the key.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_scenario(const std::filesystem::path& path);

Topology build_topology(const ScenarioConfig& cfg);

/// Topology description (positions, Willie, Alice, Bob) for plotting.
nlohmann::json topology_to_json(const Topology& topo);

}  // namespace covert
