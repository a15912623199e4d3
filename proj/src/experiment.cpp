#include "covert/experiment.hpp"

#include "covert/parallel.hpp"
#include "covert/units.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace covert {

namespace fs = std::filesystem;

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<fs::path> calibration_search_dirs(const ScenarioConfig& cfg, const fs::path& out_dir)
{
    std::vector<fs::path> dirs;
    if (cfg.calibration.dir)
        dirs.push_back(*cfg.calibration.dir);
    if (!out_dir.empty())
        dirs.push_back(out_dir);
    return dirs;
}

std::optional<CalibrationTable> find_calibration(const ScenarioConfig& cfg, DetectorKind kind,
                                                 const std::vector<fs::path>& dirs)
{
    const std::string wanted = calibration_file_name(kind, cfg.detector_model);
    const std::string prefix = "calibration-" + to_string(kind) + "-";
    std::vector<std::string> mismatched;
    for (const auto& dir : dirs) {
        const fs::path candidate = dir / wanted;
        if (fs::exists(candidate)) {
            CalibrationTable t = load_calibration(candidate.string());
            if (t.detector != kind ||
                fingerprint_hash(t.detector, t.model) != fingerprint_hash(kind, cfg.detector_model))
                throw MissingCalibrationError("calibration '" + candidate.string() +
                                              "' does not match the scenario's waveform fingerprint");
            return t;
        }
        std::error_code ec;
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".json")
                mismatched.push_back(entry.path().string());
        }
    }
    if (!mismatched.empty())
        throw MissingCalibrationError("found " + to_string(kind) + " calibration '" + mismatched.front() +
                                      "' but its fingerprint does not match the scenario; rerun `covertsim calibrate`");
    return std::nullopt;
}

CalibrationTable require_calibration(const ScenarioConfig& cfg, DetectorKind kind, const std::vector<fs::path>& dirs)
{
    auto t = find_calibration(cfg, kind, dirs);
    if (!t) {
        std::string where;
        for (const auto& d : dirs)
            where += (where.empty() ? "" : ", ") + d.string();
        throw MissingCalibrationError("no " + to_string(kind) + " calibration (" +
                                      calibration_file_name(kind, cfg.detector_model) + ") in " +
                                      (where.empty() ? std::string("any directory") : where) +
                                      "; run `covertsim calibrate` first");
    }
    return *t;
}

CalibrationTable calibrate_scenario(const ScenarioConfig& cfg, DetectorKind kind, const ProgressFn& progress)
{
    return calibrate(kind, cfg.detector_model, cfg.calibration.snr_grid_db, cfg.calibration.obs_grid_bits,
                     cfg.calibration.trials, derive_seed(cfg.seed, static_cast<std::uint64_t>(kind) + 1),
                     progress);
}

Route run_route(const Topology& topo, const Constraints& c, AllocationMode mode, const CalibrationTable* table)
{
    const HopGraph g = build_graph(topo, c, mode, table);
    return solve_route(g, table, c.m_bits);
}

Constraints with_swept_value(Constraints c, SweepParam param, double value)
{
    switch (param) {
    case SweepParam::dep_reqd:
        c.dep_reqd = value;
        break;
    case SweepParam::m_bits:
        c.m_bits = value;
        break;
    case SweepParam::d_reqd_bps:
        c.d_reqd_bps = value;
        break;
    }
    return c;
}

std::vector<SweepRow> run_sweep(const Topology& topo, const Constraints& base, AllocationMode mode,
                                const SweepSpec& sweep, const std::map<DetectorKind, CalibrationTable>& tables)
{
    if (sweep.values.empty())
        throw ConfigError("sweep grid required");
    const std::vector<DetectorKind> detectors =
        sweep.detectors.empty() ? std::vector<DetectorKind>{DetectorKind::cycle} : sweep.detectors;
    for (DetectorKind k : detectors)
        if (mode == AllocationMode::latency_min && !tables.count(k))
            throw MissingCalibrationError("latency sweep needs a " + to_string(k) + " calibration");

    const std::size_t per = sweep.values.size();
    std::vector<SweepRow> rows(detectors.size() * per);
    parallel_for(rows.size(), [&](std::size_t k) {
        SweepRow& row = rows[k];
        row.param = sweep.param;
        row.value = sweep.values[k % per];
        row.detector = detectors[k / per];
        const auto it = tables.find(row.detector);
        const CalibrationTable* table = it == tables.end() ? nullptr : &it->second;
        try {
            const Constraints c = with_swept_value(base, sweep.param, row.value);
            c.validate();
            const Route r = run_route(topo, c, mode, table);
            row.e2e_latency_s = r.e2e_latency_s;
            row.e2e_dep = r.e2e_dep;
            row.dep_extrapolated = r.dep_extrapolated;
            row.hop_count = r.hop_count();
            row.bottleneck_theta_db = linear_to_db(r.bottleneck_theta);
            row.max_spreading_gain = r.max_spreading_gain;
            row.route_nodes = r.node_sequence();
        } catch (const DisconnectedError& e) {
            row.status = "disconnected";
            row.message = e.what();
        } catch (const InfeasibleError& e) {
            row.status = "infeasible";
            row.message = e.what();
        } catch (const ConfigError& e) {
            row.status = "infeasible";
            row.message = e.what();
        }
    });
    return rows;
}

namespace {

std::string cell(const std::optional<double>& v)
{
    return v ? format_number(*v) : std::string();
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        out << to_string(r.param) << ',' << format_number(r.value) << ',' << to_string(r.detector) << ','
            << cell(r.e2e_latency_s) << ',' << cell(r.e2e_dep) << ',' << (r.dep_extrapolated ? "true" : "false")
            << ',' << (r.status == "ok" ? std::to_string(r.hop_count) : std::string()) << ','
            << cell(r.bottleneck_theta_db) << ',' << r.status << '\n';
    }
}

void write_sweep_detail_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << kSweepDetailCsvHeader << '\n';
    for (const auto& r : rows) {
        std::string nodes;
        for (std::size_t n : r.route_nodes)
            nodes += (nodes.empty() ? "" : " ") + std::to_string(n);
        out << to_string(r.param) << ',' << format_number(r.value) << ',' << to_string(r.detector) << ','
            << (r.status == "ok" ? std::to_string(r.hop_count) : std::string()) << ','
            << cell(r.max_spreading_gain) << ',' << nodes << ',' << r.status << '\n';
    }
}

}  // namespace covert
