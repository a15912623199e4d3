// covertsim: calibration, allocation, routing and sweeps for covert DSSS relaying.

#include "covert/calibration.hpp"
#include "covert/experiment.hpp"
#include "covert/hop_alloc.hpp"
#include "covert/routing.hpp"
#include "covert/scenario.hpp"
#include "covert/units.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace covert;

namespace {

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config, "scenario JSON")->required();
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
}

ScenarioConfig load(const Common& c)
{
    ScenarioConfig cfg = load_scenario(c.config);
    if (c.seed)
        cfg.seed = *c.seed;
    return cfg;
}

fs::path prepare_out(const Common& c)
{
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec || !fs::is_directory(c.out))
        throw ConfigError("output directory '" + c.out + "' cannot be created");
    return fs::path(c.out);
}

void write_json(const fs::path& path, const nlohmann::json& doc)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
}

std::string fmt(const char* pattern, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

int cmd_calibrate(const Common& c)
{
    const ScenarioConfig cfg = load(c);
    const fs::path out = prepare_out(c);
    for (DetectorKind kind : cfg.calibration.detectors) {
        std::cerr << "calibrating " << to_string(kind) << " detector: " << cfg.calibration.snr_grid_db.size()
                  << " SNR x " << cfg.calibration.obs_grid_bits.size() << " observation cells, "
                  << cfg.calibration.trials << " trials each\n";
        const CalibrationTable t = calibrate_scenario(cfg, kind, [](std::size_t done, std::size_t total) {
            std::cerr << "\r  cell " << done << "/" << total << std::flush;
        });
        std::cerr << '\n';
        const fs::path file = out / calibration_file_name(kind, cfg.detector_model);
        save_calibration(file.string(), t);

        double max_ci = 0.0;
        for (const auto& p : t.raw)
            max_ci = std::max(max_ci, p.ci_halfwidth);
        std::cout << to_string(kind) << " detector -> " << file.string() << "\n  snr_db";
        for (int obs : t.obs_grid_bits)
            std::cout << "  obs=" << obs;
        std::cout << '\n';
        for (std::size_t i = 0; i < t.snr_count(); ++i) {
            std::cout << "  " << fmt("%6.1f", t.snr_grid_db[i]);
            for (std::size_t j = 0; j < t.obs_count(); ++j)
                std::cout << "  " << fmt("%.3f", t.fit(i, j)) << "(" << fmt("%.3f", t.raw[t.index(i, j)].dep) << ")";
            std::cout << '\n';
        }
        std::cout << "  max CI half-width " << fmt("%.4f", max_ci) << ", " << t.warnings.size()
                  << " monotonicity warning(s)\n";
        for (const auto& w : t.warnings)
            std::cerr << "  warning: " << w << '\n';
    }
    return 0;
}

int cmd_allocate(const Common& c, std::optional<std::size_t> tx, std::optional<std::size_t> rx)
{
    const ScenarioConfig cfg = load(c);
    const fs::path out = prepare_out(c);
    const Topology topo = build_topology(cfg);
    const NodeId from{tx.value_or(cfg.allocate.tx)};
    const NodeId to{rx.value_or(cfg.allocate.rx)};
    if (from.index >= topo.node_count() || to.index >= topo.node_count() || from == to)
        throw ConfigError("allocate: tx/rx must be distinct node indices");
    const LinkGains gains{topo.link_gain(from, Endpoint::to(to)), topo.link_gain(from, Endpoint::willie())};

    const auto table = find_calibration(cfg, cfg.detector, calibration_search_dirs(cfg, out));
    HopAllocation a;
    if (cfg.mode == AllocationMode::covert_max) {
        a = allocate_covert_max(gains, cfg.constraints);
    } else {
        if (!table)
            throw MissingCalibrationError("latency-min allocation needs a " + to_string(cfg.detector) +
                                          " calibration; run `covertsim calibrate` first");
        a = allocate_latency_min(gains, cfg.constraints, invert_dep(*table, cfg.constraints.dep_reqd,
                                                                    cfg.constraints.m_bits).snr_w);
    }
    if (table) {
        const DepLookup d = dep_lookup(*table, a.snr_willie, cfg.constraints.m_bits);
        a.dep_estimate = d.dep;
        a.dep_extrapolated = d.extrapolated;
    }
    const AllocationReport report = verify_allocation(a, cfg.constraints, gains);

    Route single;
    single.mode = cfg.mode;
    single.hops.push_back({from, to, gains, a});
    route_metrics(single, table ? &*table : nullptr, cfg.constraints.m_bits);
    nlohmann::json doc = route_to_json(single).at("hops").at(0);
    doc["mode"] = to_string(cfg.mode);
    doc["gain_rx_db"] = linear_to_db(gains.rx);
    doc["gain_willie_db"] = linear_to_db(gains.willie);
    doc["verification"] = report.to_json();
    write_json(out / "allocation.json", doc);

    std::cout << to_string(cfg.mode) << " hop " << from.index << " -> " << to.index << ": P "
              << fmt("%.2f", watts_to_dbm(a.power_w)) << " dBm, eta " << fmt("%.4g", a.spreading_gain) << ", D "
              << fmt("%.4g", a.data_rate_bps) << " bps, latency " << fmt("%.4g", a.latency_s) << " s, theta "
              << fmt("%.2f", linear_to_db(a.theta)) << " dB";
    if (a.dep_estimate)
        std::cout << ", DEP " << fmt("%.3f", *a.dep_estimate) << (a.dep_extrapolated ? " (extrapolated)" : "");
    std::cout << "\nverification: " << (report.ok() ? "all checks pass" : "FAILED") << '\n';
    for (const auto& name : report.failures())
        std::cout << "  failed: " << name << '\n';
    return report.ok() ? 0 : 3;
}

int cmd_route(const Common& c)
{
    const ScenarioConfig cfg = load(c);
    const fs::path out = prepare_out(c);
    const Topology topo = build_topology(cfg);
    const auto dirs = calibration_search_dirs(cfg, out);
    std::optional<CalibrationTable> table = cfg.mode == AllocationMode::latency_min
                                                ? std::optional(require_calibration(cfg, cfg.detector, dirs))
                                                : find_calibration(cfg, cfg.detector, dirs);
    const Route r = run_route(topo, cfg.constraints, cfg.mode, table ? &*table : nullptr);
    nlohmann::json doc = route_to_json(r);
    doc["detector"] = to_string(cfg.detector);
    doc["alice"] = topo.alice().index;
    doc["bob"] = topo.bob().index;
    write_json(out / "route.json", doc);
    write_json(out / "topology.json", topology_to_json(topo));

    std::cout << to_string(r.mode) << " route (" << r.hop_count() << " hops):";
    for (std::size_t n : r.node_sequence())
        std::cout << ' ' << n;
    std::cout << "\n  hop  tx  rx   P[dBm]      eta   theta[dB]   latency[s]    DEP\n";
    for (std::size_t k = 0; k < r.hops.size(); ++k) {
        const auto& h = r.hops[k];
        std::cout << "  " << fmt("%3.0f", static_cast<double>(k + 1)) << fmt(" %3.0f", static_cast<double>(h.tx.index))
                  << fmt(" %3.0f", static_cast<double>(h.rx.index)) << fmt(" %8.2f", watts_to_dbm(h.alloc.power_w))
                  << fmt(" %8.3g", h.alloc.spreading_gain) << fmt(" %11.2f", linear_to_db(h.alloc.theta))
                  << fmt(" %12.4g", h.alloc.latency_s) << "  "
                  << (h.alloc.dep_estimate ? fmt("%.3f", *h.alloc.dep_estimate) : std::string("n/a")) << '\n';
    }
    std::cout << "  bottleneck theta " << fmt("%.2f", linear_to_db(r.bottleneck_theta)) << " dB, end-to-end DEP "
              << (r.e2e_dep ? fmt("%.3f", *r.e2e_dep) : std::string("n/a"))
              << (r.dep_extrapolated ? " (extrapolated)" : "") << ", end-to-end latency "
              << fmt("%.4g", r.e2e_latency_s) << " s\n";
    return 0;
}

int cmd_sweep(const Common& c)
{
    const ScenarioConfig cfg = load(c);
    if (!cfg.sweep)
        throw ConfigError("sweep grid required (add a \"sweep\" section)");
    const fs::path out = prepare_out(c);
    const Topology topo = build_topology(cfg);
    const auto dirs = calibration_search_dirs(cfg, out);
    std::map<DetectorKind, CalibrationTable> tables;
    for (DetectorKind k : cfg.sweep->detectors) {
        if (cfg.mode == AllocationMode::latency_min)
            tables.emplace(k, require_calibration(cfg, k, dirs));
        else if (auto t = find_calibration(cfg, k, dirs))
            tables.emplace(k, std::move(*t));
    }
    const auto rows = run_sweep(topo, cfg.constraints, cfg.mode, *cfg.sweep, tables);
    {
        std::ofstream f(out / "sweep.csv");
        if (!f)
            throw ConfigError("cannot write sweep.csv");
        write_sweep_csv(f, rows);
    }
    {
        std::ofstream f(out / "sweep_detail.csv");
        if (!f)
            throw ConfigError("cannot write sweep_detail.csv");
        write_sweep_detail_csv(f, rows);
    }
    write_sweep_csv(std::cout, rows);
    for (const auto& r : rows)
        if (r.status != "ok")
            std::cerr << to_string(r.param) << "=" << format_number(r.value) << " (" << to_string(r.detector)
                      << "): " << r.message << '\n';
    return 0;
}

int cmd_gen_topology(const Common& c)
{
    const ScenarioConfig cfg = load(c);
    const fs::path out = prepare_out(c);
    const Topology topo = build_topology(cfg);
    write_json(out / "topology.json", topology_to_json(topo));
    write_gain_csv((out / "gains.csv").string(), topo.gain_table());
    std::cout << "wrote " << (out / "topology.json").string() << " and " << (out / "gains.csv").string() << " ("
              << topo.node_count() << " nodes)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Covert multi-hop DSSS routing against cyclostationary and energy detectors"};
    app.require_subcommand(1);
    Common common;
    std::optional<std::size_t> tx, rx;

    auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo DEP tables for the configured detectors");
    auto* allocate = app.add_subcommand("allocate", "single-hop allocation with constraint verification");
    auto* route = app.add_subcommand("route", "optimal route for the configured mode");
    auto* sweep = app.add_subcommand("sweep", "routing sweep over dep_reqd, m_bits or d_reqd_bps");
    auto* gen = app.add_subcommand("gen-topology", "write the topology and its gain matrix");
    for (auto* cmd : {calibrate, allocate, route, sweep, gen})
        add_common(cmd, common);
    allocate->add_option("--tx", tx, "transmitting node");
    allocate->add_option("--rx", rx, "receiving node");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*calibrate)
            return cmd_calibrate(common);
        if (*allocate)
            return cmd_allocate(common, tx, rx);
        if (*route)
            return cmd_route(common);
        if (*sweep)
            return cmd_sweep(common);
        if (*gen)
            return cmd_gen_topology(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const MissingCalibrationError& e) {
        std::cerr << "missing calibration: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
