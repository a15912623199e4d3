#include "covert/hop_alloc.hpp"
#include "covert/units.hpp"

#include "doctest.h"

#include <algorithm>
#include <random>

using namespace covert;

namespace {

bool fails(const AllocationReport& r, const std::string& name)
{
    const auto f = r.failures();
    return std::find(f.begin(), f.end(), name) != f.end();
}

}  // namespace

TEST_CASE("snr pair arithmetic")
{
    const auto [rx, w] = snr_pair(1.253e-7, 1e7, 4.0, 1.0, 1.0, 5.012e-15);
    CHECK(rx == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(w == doctest::Approx(2.5).epsilon(1e-3));
    const auto [a, b] = snr_pair(3.0, 2e6, 1.0, 1e-9, 1e-9, 1e-15);
    CHECK(a == b);
}

TEST_CASE("covert-max closed form")
{
    const Constraints c;
    const LinkGains g{1e-8, 1e-10};
    const HopAllocation a = allocate_covert_max(g, c);
    CHECK(a.spreading_gain == 4.0);
    CHECK(a.bandwidth_hz == 1e7);
    CHECK(a.data_rate_bps == 2.5e6);
    CHECK(a.snr_rx == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(a.theta == doctest::Approx(400.0).epsilon(1e-12));
    CHECK(a.latency_s == doctest::Approx(40.0));
    CHECK(a.snr_willie == doctest::Approx(a.snr_rx / a.theta).epsilon(1e-12));
    const auto [rx, w] = snr_pair(a.power_w, a.bandwidth_hz, a.spreading_gain, g.rx, g.willie, c.n0_w_per_hz);
    CHECK(rx == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(w == doctest::Approx(a.snr_willie).epsilon(1e-12));
    CHECK(verify_allocation(a, c, g).ok());

    const HopAllocation same = allocate_covert_max({3e-9, 3e-9}, c);
    CHECK(same.theta == doctest::Approx(same.spreading_gain).epsilon(1e-15));
}

TEST_CASE("covert-max infeasibility")
{
    Constraints c;
    c.d_reqd_bps = 2e7;
    CHECK_THROWS_AS(allocate_covert_max({1e-8, 1e-10}, c), InfeasibleError);
    c = Constraints{};
    CHECK_THROWS_AS(allocate_covert_max({1e-20, 1e-10}, c), InfeasibleError);
    CHECK_THROWS_AS(allocate_covert_max({0.0, 1e-10}, c), InfeasibleError);
    CHECK_THROWS_AS(allocate_covert_max({1e-8, 0.0}, c), InfeasibleError);
}

TEST_CASE("theta depends only on gains and spreading")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lg(-12.0, -6.0);
    for (int rep = 0; rep < 200; ++rep) {
        const LinkGains g{std::pow(10.0, lg(rng)), std::pow(10.0, lg(rng))};
        Constraints c;
        c.p_max_w = 1e9;
        c.n0_w_per_hz = std::pow(10.0, lg(rng) - 6.0);
        const auto a = allocate_covert_max(g, c);
        CHECK(a.theta == doctest::Approx(g.rx / g.willie * 4.0).epsilon(1e-12));
        CHECK(verify_allocation(a, c, g).ok());
    }
}

TEST_CASE("latency-min closed form")
{
    Constraints c;
    const LinkGains g{1e-8, 1e-10};
    const HopAllocation a = allocate_latency_min(g, c, 0.1);
    CHECK(a.latency_s == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(a.spreading_gain == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.latency_s * c.omega_max_hz / c.m_bits == doctest::Approx(a.spreading_gain).epsilon(1e-12));
    CHECK(a.snr_rx == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(a.snr_willie == doctest::Approx(0.1).epsilon(1e-9));
    CHECK_FALSE(a.power_capped);
    CHECK(verify_allocation(a, c, g).ok());

    LinkGains weaker = g;
    weaker.rx /= 2.0;
    const HopAllocation b = allocate_latency_min(weaker, c, 0.1);
    CHECK(b.latency_s == doctest::Approx(2.0 * a.latency_s).epsilon(1e-12));
}

TEST_CASE("latency-min with the power cap binding")
{
    Constraints c;
    c.p_max_w = 1.0;
    const LinkGains g{1e-9, 1e-10};
    const HopAllocation a = allocate_latency_min(g, c, 1e12);
    CHECK(a.power_capped);
    CHECK(a.power_w == 1.0);
    const double noise = c.n0_w_per_hz * c.omega_max_hz;
    const double snr_w = c.p_max_w * g.willie / noise;
    const double expected = c.m_bits * (c.snr_reqd / snr_w) * (g.willie / g.rx) / c.omega_max_hz;
    CHECK(a.latency_s == doctest::Approx(expected).epsilon(1e-12));
    CHECK(a.snr_rx == doctest::Approx(c.snr_reqd).epsilon(1e-9));
    CHECK(verify_allocation(a, c, g).ok());
}

TEST_CASE("latency-min raises a sub-unity spreading gain to one")
{
    Constraints c;
    const LinkGains g{1e-8, 1e-10};
    const HopAllocation a = allocate_latency_min(g, c, 1.0);
    CHECK(a.gain_clamped);
    CHECK(a.spreading_gain == 1.0);
    CHECK(a.latency_s == doctest::Approx(c.m_bits / c.omega_max_hz));
    CHECK(a.snr_rx == doctest::Approx(c.snr_reqd).epsilon(1e-12));
    CHECK(a.snr_willie <= 1.0);
    CHECK(verify_allocation(a, c, g).ok());
    CHECK_THROWS_AS(allocate_latency_min(g, c, 0.0), InfeasibleError);
    CHECK_THROWS_AS(allocate_latency_min({0.0, 1e-10}, c, 1.0), InfeasibleError);
}

TEST_CASE("latency identity and monotonicity over random inputs")
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        Constraints c;
        c.m_bits = std::pow(10.0, 3.0 + 6.0 * u(rng));
        c.omega_max_hz = std::pow(10.0, 5.0 + 3.0 * u(rng));
        c.snr_reqd = std::pow(10.0, 2.0 * u(rng));
        c.p_max_w = std::pow(10.0, 4.0 * u(rng) - 1.0);
        const LinkGains g{std::pow(10.0, -6.0 - 4.0 * u(rng)), std::pow(10.0, -6.0 - 4.0 * u(rng))};
        const double cap = std::pow(10.0, -3.0 + 3.0 * u(rng));
        const HopAllocation a = allocate_latency_min(g, c, cap);
        CHECK(a.latency_s * c.omega_max_hz / c.m_bits == doctest::Approx(a.spreading_gain).epsilon(1e-12));
        CHECK(a.spreading_gain >= 1.0);
        CHECK(verify_allocation(a, c, g).ok());
        const HopAllocation stricter = allocate_latency_min(g, c, cap / 2.0);
        CHECK(stricter.latency_s >= a.latency_s * (1.0 - 1e-12));
    }
}

TEST_CASE("verification catches tampered allocations")
{
    const Constraints c;
    const LinkGains g{1e-8, 1e-10};

    HopAllocation lat = allocate_latency_min(g, c, 0.1);
    lat.power_w *= 1.01;
    auto r = verify_allocation(lat, c, g);
    CHECK(fails(r, "snr_willie_cap"));

    HopAllocation cov = allocate_covert_max(g, c);
    cov.spreading_gain /= 2.0;
    r = verify_allocation(cov, c, g);
    CHECK_FALSE(r.ok());
    CHECK(fails(r, "ber"));
    CHECK(fails(r, "snr_rx_equality"));
    CHECK(fails(r, "data_rate_consistent"));

    cov = allocate_covert_max(g, c);
    cov.spreading_gain = 0.5;
    cov.data_rate_bps = c.omega_max_hz / 0.5;
    CHECK(fails(verify_allocation(cov, c, g), "spreading_gain"));

    cov = allocate_covert_max(g, c);
    cov.power_w = 200.0;
    CHECK(fails(verify_allocation(cov, c, g), "power_budget"));

    cov = allocate_covert_max(g, c);
    cov.bandwidth_hz = -1.0;
    r = verify_allocation(cov, c, g);
    CHECK(fails(r, "inputs"));
    CHECK(r.checks.size() == 1);

    HopAllocation nocap = allocate_latency_min(g, c, 0.1);
    nocap.snr_willie_max.reset();
    CHECK(fails(verify_allocation(nocap, c, g), "snr_willie_cap"));

    const auto doc = verify_allocation(allocate_covert_max(g, c), c, g).to_json();
    CHECK(doc["ok"] == true);
    CHECK(doc["checks"].size() == 12);
}

TEST_CASE("constraint validation")
{
    Constraints c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.ber_reqd() == doctest::Approx(3.87e-6).epsilon(0.01));
    c.dep_reqd = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = Constraints{};
    c.m_bits = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(to_string(AllocationMode::latency_min) == "latency_min");
}
