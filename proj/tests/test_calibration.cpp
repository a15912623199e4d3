#include "covert/calibration.hpp"
#include "covert/units.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "doctest.h"

#include <filesystem>
#include <limits>
#include <fstream>
#include <random>

using namespace covert;

TEST_CASE("pool-adjacent-violators matches the min-max formula")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> y(1 + rng() % 15);
        for (double& v : y)
            v = rep % 3 == 0 ? std::round(u(rng) * 4) / 4 : u(rng);
        const auto fit = isotonic_non_increasing(y);
        const auto ref = oracle::isotonic_min_max(y);
        REQUIRE(fit.size() == y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(fit[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        for (std::size_t i = 1; i < y.size(); ++i)
            CHECK(fit[i] <= fit[i - 1] + 1e-15);
    }
    CHECK(isotonic_non_increasing({}).empty());
    const auto pair = isotonic_non_increasing({0.2, 0.4});
    CHECK(pair[0] == doctest::Approx(0.3));
    CHECK(pair[1] == pair[0]);
}

TEST_CASE("refit is monotone along both axes")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto t = fixture::table_from(DetectorKind::cycle, {-10, -5, 0, 5, 10}, {16, 32, 64}, [&](double, int) {
        return u(rng);
    });
    for (std::size_t j = 0; j < t.obs_count(); ++j)
        for (std::size_t i = 0; i < t.snr_count(); ++i) {
            if (i > 0)
                CHECK(t.fit(i, j) <= t.fit(i - 1, j) + 1e-12);
            if (j > 0)
                CHECK(t.fit(i, j) <= t.fit(i, j - 1) + 1e-12);
            CHECK(t.fit(i, j) >= 0.0);
            CHECK(t.fit(i, j) <= 1.0);
        }
}

TEST_CASE("lookup on and between grid points")
{
    auto t = fixture::table_from(DetectorKind::cycle, {-10, 0, 10}, {16, 64}, [](double s, int obs) {
        if (s < -5)
            return 0.9;
        if (s < 5)
            return obs == 16 ? 0.6 : 0.5;
        return obs == 16 ? 0.4 : 0.2;
    });
    CHECK(dep_lookup(t, db_to_linear(0.0), 16).dep == doctest::Approx(0.6));
    CHECK_FALSE(dep_lookup(t, db_to_linear(0.0), 16).clamped);
    CHECK(dep_lookup(t, db_to_linear(5.0), 16).dep == doctest::Approx(0.5));
    CHECK(dep_lookup(t, db_to_linear(0.0), 32).dep == doctest::Approx(0.55));
    const auto below = dep_lookup(t, db_to_linear(-40.0), 16);
    CHECK(below.dep == doctest::Approx(0.9));
    CHECK(below.clamped);
    CHECK(dep_lookup(t, 0.0, 16).dep == doctest::Approx(0.9));
    const auto above = dep_lookup(t, db_to_linear(30.0), 64);
    CHECK(above.dep == doctest::Approx(0.2));
    CHECK(above.clamped);
    CHECK(dep_lookup(t, db_to_linear(0.0), 8).clamped);
    CHECK_THROWS(dep_lookup(t, 1.0, 0.0));
}

TEST_CASE("lookup beyond the longest observation shifts the contours")
{
    const auto t = fixture::logistic_table(DetectorKind::cycle, -10.0, 2.0, 2.5);
    // The 50% contour sits at -10 - 2 * log2(obs / 16) dB.
    for (double obs : {2048.0, 1e5, 1e8}) {
        const double centre = -10.0 - 2.0 * std::log2(obs / 16.0);
        const auto q = dep_lookup(t, db_to_linear(centre), obs);
        CHECK(q.extrapolated);
        if (centre > -25.0)
            CHECK(q.dep == doctest::Approx(0.5).epsilon(0.02));
        const auto lower = dep_lookup(t, db_to_linear(centre - 3.0), obs);
        CHECK(lower.dep >= q.dep);
    }
    CHECK_FALSE(dep_lookup(t, 1.0, 1024).extrapolated);
}

TEST_CASE("inversion identities and errors")
{
    const auto t = fixture::logistic_table();
    for (std::size_t i = 2; i + 2 < t.snr_count(); ++i) {
        const double d = t.fit(i, 1);
        if (d <= 0.0 || d >= 1.0)
            continue;
        const auto lim = invert_dep(t, d, 64);
        CHECK(linear_to_db(lim.snr_w) == doctest::Approx(t.snr_grid_db[i]).epsilon(1e-6));
        CHECK_FALSE(lim.clamped);
    }
    auto capped = fixture::table_from(DetectorKind::cycle, {-10, 0, 10}, {16}, [](double s, int) {
        return s < 0 ? 0.98 : 0.5;
    });
    CHECK_THROWS_AS(invert_dep(capped, 0.999, 16), InfeasibleError);
    try {
        invert_dep(capped, 0.999, 16);
    } catch (const InfeasibleError& e) {
        CHECK(std::string(e.what()).find("requirement exceeds detector-limited covertness") != std::string::npos);
    }
    const auto whole = invert_dep(capped, 0.3, 16);
    CHECK(whole.clamped);
    CHECK(linear_to_db(whole.snr_w) == doctest::Approx(10.0));
    CHECK_THROWS_AS(invert_dep(capped, 1.0, 16), ConfigError);
    CHECK_THROWS_AS(invert_dep(capped, 0.0, 16), ConfigError);
    CHECK_THROWS_AS(dep_lookup(CalibrationTable{}, 1.0, 16), MissingCalibrationError);
}

TEST_CASE("bisection agrees with a linear scan")
{
    const auto t = fixture::logistic_table(DetectorKind::energy, -8.0, 1.5, 3.0);
    for (double obs : {16.0, 100.0, 1024.0, 5000.0}) {
        for (double d : {0.05, 0.3, 0.5, 0.85}) {
            SnrLimit lim;
            try {
                lim = invert_dep(t, d, obs);
            } catch (const InfeasibleError&) {
                CHECK(dep_lookup(t, db_to_linear(-25.0), obs).dep < d);
                continue;
            }
            CHECK(dep_lookup(t, lim.snr_w, obs).dep >= d - 1e-9);
            if (lim.clamped)
                continue;
            const double shift = obs > 1024 ? 1.5 * std::log2(obs / 1024.0) : 0.0;
            const double lo = -25.0 - shift - 5.0, hi = 5.0 - shift;
            const int n = 1000;
            const double step = (hi - lo) / (n - 1);
            double scan = lo;
            for (int k = 0; k < n; ++k) {
                const double s = lo + k * step;
                if (dep_lookup(t, db_to_linear(s), obs).dep >= d)
                    scan = s;
            }
            CHECK(std::abs(linear_to_db(lim.snr_w) - scan) <= step + 1e-9);
        }
    }
}

TEST_CASE("violations use the combined confidence interval")
{
    auto t = fixture::table_from(DetectorKind::cycle, {-10, 0, 10}, {16, 64}, [](double s, int) {
        return s < -5 ? 0.8 : (s < 5 ? 0.5 : 0.3);
    });
    CHECK(monotonicity_violations(t).empty());
    t.raw[t.index(2, 0)].dep = 0.5 + 2.0 * std::hypot(0.02, 0.02) + 0.01;
    CHECK(monotonicity_violations(t) == std::vector<std::size_t>{t.index(2, 0)});
    t.raw[t.index(2, 0)].dep = 0.5 + 2.0 * std::hypot(0.02, 0.02) - 0.01;
    CHECK(monotonicity_violations(t).empty());
    t.raw[t.index(1, 1)].dep = 0.7;
    CHECK(monotonicity_violations(t) == std::vector<std::size_t>{t.index(1, 1)});
}

TEST_CASE("fingerprints and file names")
{
    DetectorModel a;
    DetectorModel b;
    CHECK(fingerprint_hash(DetectorKind::cycle, a) == fingerprint_hash(DetectorKind::cycle, b));
    CHECK(fingerprint_hash(DetectorKind::cycle, a) != fingerprint_hash(DetectorKind::energy, a));
    b.bit_harmonics = 3;
    CHECK(fingerprint_hash(DetectorKind::cycle, a) != fingerprint_hash(DetectorKind::cycle, b));
    b = a;
    b.waveform = DsssParams::make(15);
    CHECK(fingerprint_hash(DetectorKind::cycle, a) != fingerprint_hash(DetectorKind::cycle, b));
    const std::string name = calibration_file_name(DetectorKind::energy, a);
    CHECK(name.rfind("calibration-energy-", 0) == 0);
    CHECK(name.size() == std::string("calibration-energy-").size() + 16 + 5);
}

TEST_CASE("json round trip and tamper detection")
{
    auto t = fixture::logistic_table(DetectorKind::energy);
    t.warnings = {"a note"};
    t.raw[0].threshold = -std::numeric_limits<double>::infinity();
    t.raw[1].threshold = std::numeric_limits<double>::infinity();
    const auto doc = to_json(t);
    const auto back = calibration_from_json(doc);
    CHECK(back.detector == t.detector);
    CHECK(back.snr_grid_db == t.snr_grid_db);
    CHECK(back.obs_grid_bits == t.obs_grid_bits);
    CHECK(back.fitted == t.fitted);
    CHECK(back.warnings == t.warnings);
    REQUIRE(back.raw.size() == t.raw.size());
    for (std::size_t k = 0; k < t.raw.size(); ++k) {
        CHECK(back.raw[k].dep == t.raw[k].dep);
        CHECK(back.raw[k].ci_halfwidth == t.raw[k].ci_halfwidth);
        CHECK(back.raw[k].threshold == t.raw[k].threshold);
    }
    CHECK(to_json(back).dump() == doc.dump());

    auto tampered = doc;
    tampered["fingerprint"]["bit_harmonics"] = 9;
    CHECK_THROWS_AS(calibration_from_json(tampered), ConfigError);
    CHECK_THROWS_AS(calibration_from_json(nlohmann::json{{"detector", "cycle"}}), ConfigError);

    const auto dir = std::filesystem::temp_directory_path() / "covert_calibration_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / calibration_file_name(t.detector, t.model)).string();
    save_calibration(path, t);
    CHECK(load_calibration(path).fitted == t.fitted);
    CHECK_THROWS_AS(load_calibration((dir / "missing.json").string()), MissingCalibrationError);
    std::ofstream(dir / "broken.json") << "{not json";
    CHECK_THROWS_AS(load_calibration((dir / "broken.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("monte-carlo calibration at desk scale")
{
    DetectorModel model;
    const auto cyc = calibrate(DetectorKind::cycle, model, {-20.0, 0.0}, {64}, 200, 7);
    CHECK(cyc.raw.size() == 2);
    CHECK(cyc.fit(0, 0) >= 0.9);
    CHECK(cyc.fit(1, 0) < 0.1);
    const auto en = calibrate(DetectorKind::energy, model, {-10.0, 0.0}, {64}, 200, 7);
    CHECK(en.fit(1, 0) < en.fit(0, 0));
    CHECK(en.raw[0].dep > en.raw[1].dep);

    const auto again = calibrate(DetectorKind::cycle, model, {-20.0, 0.0}, {64}, 200, 7);
    CHECK(to_json(again).dump() == to_json(cyc).dump());

    std::size_t calls = 0;
    calibrate(DetectorKind::energy, model, {0.0}, {16}, 10, 1, [&](std::size_t done, std::size_t total) {
        ++calls;
        CHECK(done <= total);
    });
    CHECK(calls >= 1);
    CHECK_THROWS_AS(calibrate(DetectorKind::energy, model, {0.0, -1.0}, {16}, 10, 1), ConfigError);
    CHECK_THROWS_AS(calibrate(DetectorKind::energy, model, {0.0}, {16}, 1, 1), ConfigError);
}
