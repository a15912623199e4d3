#include "covert/units.hpp"

#include <cmath>

namespace covert {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double ber(double snr)
{
    if (snr < 0.0)
        throw std::invalid_argument("ber: negative snr");
    return q_function(std::sqrt(2.0 * snr));
}

double snr_for_ber(double target)
{
    if (!(target > 0.0 && target <= 0.5))
        throw std::invalid_argument("snr_for_ber: target must be in (0, 0.5]");
    if (target == 0.5)
        return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (ber(hi) > target)
        hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ber(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace covert
