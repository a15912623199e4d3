#pragma once
// Hand-built calibration tables so tests above the detector layer stay fast.

#include "covert/calibration.hpp"
#include "covert/scenario.hpp"

#include <cmath>
#include <functional>

namespace fixture {

inline covert::CalibrationTable table_from(covert::DetectorKind kind, std::vector<double> snr_db,
                                           std::vector<int> obs_bits,
                                           const std::function<double(double, int)>& dep)
{
    covert::CalibrationTable t;
    t.detector = kind;
    t.snr_grid_db = std::move(snr_db);
    t.obs_grid_bits = std::move(obs_bits);
    t.trials = 500;
    t.seed = 1;
    t.raw.resize(t.snr_count() * t.obs_count());
    for (std::size_t j = 0; j < t.obs_count(); ++j)
        for (std::size_t i = 0; i < t.snr_count(); ++i) {
            covert::DepPoint& p = t.raw[t.index(i, j)];
            p.snr_w_db = t.snr_grid_db[i];
            p.obs_bits = t.obs_grid_bits[j];
            p.dep = dep(p.snr_w_db, p.obs_bits);
            p.ci_halfwidth = 0.02;
            p.p_md = p.dep / 2;
            p.p_fa = p.dep / 2;
        }
    t.refit();
    return t;
}

// Logistic DEP curve whose 50% point moves down by `rate_db` per octave of
// observation length.
inline covert::CalibrationTable logistic_table(covert::DetectorKind kind = covert::DetectorKind::cycle,
                                               double centre_db = -10.0, double rate_db = 2.0, double width_db = 2.5)
{
    return table_from(kind, covert::default_snr_grid_db(), {16, 64, 256, 1024}, [=](double s, int obs) {
        const double c = centre_db - rate_db * std::log2(obs / 16.0);
        return 1.0 / (1.0 + std::exp((s - c) / width_db));
    });
}

}  // namespace fixture
