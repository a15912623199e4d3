#include "covert/experiment.hpp"
#include "covert/units.hpp"
#include "fixtures.hpp"

#include "doctest.h"

#include <filesystem>
#include <sstream>

using namespace covert;

namespace {

ScenarioConfig preset()
{
    return load_scenario(std::filesystem::path(PRESETS_DIR) / "grid6x6.json");
}

std::map<DetectorKind, CalibrationTable> tables()
{
    return {{DetectorKind::cycle, fixture::logistic_table(DetectorKind::cycle, -10.0, 2.0, 2.5)},
            {DetectorKind::energy, fixture::logistic_table(DetectorKind::energy, -14.0, 1.0, 4.0)}};
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("sweep csv layout")
{
    const ScenarioConfig cfg = preset();
    Constraints c = cfg.constraints;
    c.m_bits = 64;
    SweepSpec sweep{SweepParam::dep_reqd, {0.05, 0.5, 0.97, 0.999}, {DetectorKind::cycle, DetectorKind::energy}};
    const auto rows = run_sweep(build_topology(cfg), c, AllocationMode::latency_min, sweep, tables());
    REQUIRE(rows.size() == 8);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    const auto text = lines(csv.str());
    REQUIRE(text.size() == 9);
    CHECK(text[0] == "swept_param,swept_value,detector,e2e_latency_s,e2e_dep,dep_extrapolated,hop_count,"
                     "bottleneck_theta_db,status");
    CHECK(text[1].rfind("dep_reqd,0.05,cycle,", 0) == 0);
    CHECK(text[5].rfind("dep_reqd,0.05,energy,", 0) == 0);
    // 0.999 lies above anything the table reaches: recorded, not fatal.
    CHECK(rows[3].status == "infeasible");
    CHECK(text[4] == "dep_reqd,0.999,cycle,,,false,,,infeasible");
    for (std::size_t k : {0u, 1u, 2u})
        CHECK(rows[k].status == "ok");

    std::ostringstream detail;
    write_sweep_detail_csv(detail, rows);
    const auto dl = lines(detail.str());
    CHECK(dl[0] == kSweepDetailCsvHeader);
    CHECK(dl[1].rfind("dep_reqd,0.05,cycle,", 0) == 0);
    CHECK(dl[1].find(" 35,ok") != std::string::npos);
}

TEST_CASE("sweep output is reproducible")
{
    const ScenarioConfig cfg = preset();
    Constraints c = cfg.constraints;
    c.m_bits = 256;
    SweepSpec sweep{SweepParam::dep_reqd, {0.1, 0.3, 0.6, 0.9}, {DetectorKind::cycle}};
    std::ostringstream a, b;
    write_sweep_csv(a, run_sweep(build_topology(cfg), c, AllocationMode::latency_min, sweep, tables()));
    write_sweep_csv(b, run_sweep(build_topology(cfg), c, AllocationMode::latency_min, sweep, tables()));
    CHECK(a.str() == b.str());
}

TEST_CASE("latency grows and hop count shrinks as covertness loosens")
{
    const ScenarioConfig cfg = preset();
    Constraints c = cfg.constraints;
    c.m_bits = 256;
    SweepSpec sweep{SweepParam::dep_reqd, {}, {DetectorKind::cycle}};
    for (double d = 0.02; d < 0.99; d += 0.04)
        sweep.values.push_back(d);
    const auto rows = run_sweep(build_topology(cfg), c, AllocationMode::latency_min, sweep, tables());
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].status != "ok" || rows[k - 1].status != "ok")
            continue;
        CHECK(*rows[k].e2e_latency_s >= *rows[k - 1].e2e_latency_s * (1.0 - 1e-12));
        CHECK(rows[k].hop_count >= rows[k - 1].hop_count);
        CHECK(*rows[k].e2e_dep >= rows[k].value - 1e-9);
    }
}

TEST_CASE("latency is linear in message length while spreading is unused")
{
    const ScenarioConfig cfg = preset();
    Constraints c = cfg.constraints;
    c.dep_reqd = 0.01;
    SweepSpec sweep{SweepParam::m_bits, {16, 32, 64}, {DetectorKind::cycle}};
    const auto rows = run_sweep(build_topology(cfg), c, AllocationMode::latency_min, sweep, tables());
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        REQUIRE(r.status == "ok");
        CHECK(*r.max_spreading_gain == 1.0);
    }
    CHECK(*rows[1].e2e_latency_s / *rows[0].e2e_latency_s == doctest::Approx(2.0).epsilon(0.1));
    CHECK(*rows[2].e2e_latency_s / *rows[1].e2e_latency_s == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("covert-max route on the grid preset")
{
    const ScenarioConfig cfg = preset();
    const auto t = tables();
    const Route r = run_route(build_topology(cfg), cfg.constraints, AllocationMode::covert_max,
                              &t.at(DetectorKind::cycle));
    CHECK(r.node_sequence().front() == 0);
    CHECK(r.node_sequence().back() == 35);
    REQUIRE(r.e2e_dep);
    CHECK(r.dep_extrapolated);
    for (const auto& h : r.hops) {
        CHECK(h.alloc.spreading_gain == 4.0);
        CHECK(h.alloc.theta >= r.bottleneck_theta);
    }
}

TEST_CASE("sweep argument errors")
{
    const ScenarioConfig cfg = preset();
    SweepSpec empty{SweepParam::dep_reqd, {}, {DetectorKind::cycle}};
    CHECK_THROWS_AS(run_sweep(build_topology(cfg), cfg.constraints, AllocationMode::covert_max, empty, {}),
                    ConfigError);
    SweepSpec one{SweepParam::dep_reqd, {0.5}, {DetectorKind::energy}};
    CHECK_THROWS_AS(run_sweep(build_topology(cfg), cfg.constraints, AllocationMode::latency_min, one, {}),
                    MissingCalibrationError);
    Constraints c = with_swept_value(cfg.constraints, SweepParam::d_reqd_bps, 1e6);
    CHECK(c.d_reqd_bps == 1e6);
    CHECK(format_number(0.1) == "0.1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("calibration lookup refuses mismatched fingerprints")
{
    const auto dir = std::filesystem::temp_directory_path() / "covert_experiment_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ScenarioConfig cfg = preset();
    cfg.calibration.dir.reset();
    const std::vector<std::filesystem::path> dirs{dir};

    CHECK_FALSE(find_calibration(cfg, DetectorKind::cycle, dirs));
    CHECK_THROWS_AS(require_calibration(cfg, DetectorKind::cycle, dirs), MissingCalibrationError);

    CalibrationTable good = fixture::logistic_table();
    good.model = cfg.detector_model;
    save_calibration((dir / calibration_file_name(DetectorKind::cycle, good.model)).string(), good);
    CHECK(find_calibration(cfg, DetectorKind::cycle, dirs).has_value());

    ScenarioConfig other = cfg;
    other.detector_model.bit_harmonics = 3;
    try {
        find_calibration(other, DetectorKind::cycle, dirs);
        FAIL("expected a fingerprint refusal");
    } catch (const MissingCalibrationError& e) {
        CHECK(std::string(e.what()).find("fingerprint") != std::string::npos);
    }
    // A file carrying the right name but another model's content is refused too.
    std::filesystem::rename(dir / calibration_file_name(DetectorKind::cycle, good.model),
                            dir / calibration_file_name(DetectorKind::cycle, other.detector_model));
    CHECK_THROWS_AS(find_calibration(other, DetectorKind::cycle, dirs), MissingCalibrationError);
    std::filesystem::remove_all(dir);

    const auto search = calibration_search_dirs(preset(), "out");
    REQUIRE(search.size() == 2);
    CHECK(search[1] == "out");
}
