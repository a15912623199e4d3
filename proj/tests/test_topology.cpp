#include "covert/topology.hpp"
#include "covert/units.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

using namespace covert;

TEST_CASE("free-space reference gain at 900 MHz")
{
    const auto m = PathLossModel::with_free_space_reference(900e6);
    const double lambda = kSpeedOfLight / 900e6;
    const double expect = std::pow(lambda / (4.0 * std::numbers::pi), 2.0);
    CHECK(db_to_linear(m.reference_gain_db) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(m.reference_gain_db == doctest::Approx(-31.53).epsilon(1e-3));
    // Exponent 3: ten times the distance costs 30 dB.
    CHECK(linear_to_db(m.gain(10.0)) - linear_to_db(m.gain(100.0)) == doctest::Approx(30.0));
    CHECK_THROWS(m.gain(0.0));
}

TEST_CASE("grid topology layout and role assignment")
{
    const Topology t = grid_topology(6, 6, 50.0, {75.0, 200.0, 0.0});
    CHECK(t.node_count() == 36);
    CHECK(t.alice().index == 0);
    CHECK(t.bob().index == 35);
    const Vec3& p = t.position(NodeId{7});  // i = 1, j = 1
    CHECK(p[0] == 50.0);
    CHECK(p[1] == 50.0);
    CHECK(t.position(NodeId{35})[0] == 250.0);
    const double g = t.link_gain(NodeId{0}, Endpoint::to(NodeId{1}));
    CHECK(g == doctest::Approx(t.path_loss().gain(50.0)));
    CHECK(t.link_gain(NodeId{0}, Endpoint::to(NodeId{1})) == t.link_gain(NodeId{1}, Endpoint::to(NodeId{0})));
    const double gw = t.link_gain(NodeId{0}, Endpoint::willie());
    CHECK(gw == doctest::Approx(t.path_loss().gain(std::hypot(75.0, 200.0))));
}

TEST_CASE("topology rejects degenerate inputs")
{
    CHECK_THROWS_AS(Topology({{0, 0, 0}}, {1, 1, 0}, NodeId{0}, NodeId{0}), ConfigError);
    CHECK_THROWS_AS(Topology({{0, 0, 0}, {1, 0, 0}}, {1, 1, 0}, NodeId{0}, NodeId{0}), ConfigError);
    CHECK_THROWS_AS(Topology({{0, 0, 0}, {NAN, 0, 0}}, {1, 1, 0}, NodeId{0}, NodeId{1}), ConfigError);
}

TEST_CASE("gain csv round-trips exactly")
{
    const Topology t = grid_topology(3, 2, 37.5, {10.0, 60.0, 1.5});
    const GainTable g = t.gain_table();
    std::stringstream buf;
    write_gain_csv(buf, g);
    const std::string text = buf.str();
    CHECK(text.rfind("node_0,node_1,node_2,node_3,node_4,node_5,willie\n", 0) == 0);
    const GainTable back = read_gain_csv(buf);
    REQUIRE(back.node_count == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(back.willie_db[i] == g.willie_db[i]);
        for (std::size_t j = 0; j < 6; ++j)
            if (i != j)
                CHECK(back.node_db[i * 6 + j] == g.node_db[i * 6 + j]);
    }
    const Topology imported = t.with_imported_gains(back);
    CHECK(imported.gain_source() == GainSource::imported);
    CHECK(imported.link_gain(NodeId{2}, Endpoint::to(NodeId{4})) ==
          doctest::Approx(t.link_gain(NodeId{2}, Endpoint::to(NodeId{4}))).epsilon(1e-12));
}

TEST_CASE("gain csv errors name the row and column")
{
    auto error_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            read_gain_csv(in);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of("node_0,node_1,willie\n0,-80,-90\n-80,x,-95\n") == "");  // diagonal cell ignored
    const std::string bad = error_of("node_0,node_1,willie\n0,-80,-90\n-80,0,abc\n");
    CHECK(bad.find("row 2") != std::string::npos);
    CHECK(bad.find("willie") != std::string::npos);
    const std::string inf = error_of("node_0,node_1,willie\n0,inf,-90\n-80,0,-95\n");
    CHECK(inf.find("row 1") != std::string::npos);
    CHECK(inf.find("node_1") != std::string::npos);
    CHECK(error_of("node_0,willie\n") != "");                // too few nodes or rows
    CHECK(error_of("a,b,willie\n0,1,2\n3,4,5\n") != "");     // bad header
    CHECK(error_of("node_0,node_1,willie\n0,-80\n") != "");  // short row
}

TEST_CASE("imported gains must match the node count")
{
    const Topology t = grid_topology(2, 2, 10.0, {5, 5, 0});
    GainTable small;
    small.node_count = 3;
    small.node_db.assign(9, -70.0);
    small.willie_db.assign(3, -80.0);
    CHECK_THROWS_AS(t.with_imported_gains(small), ConfigError);
}

TEST_CASE("link range limit")
{
    const Topology t = grid_topology(3, 1, 50.0, {0, 100, 0}).with_max_link_distance(60.0);
    CHECK(t.link_allowed(NodeId{0}, NodeId{1}));
    CHECK_FALSE(t.link_allowed(NodeId{0}, NodeId{2}));
    CHECK(t.with_max_link_distance(std::nullopt).link_allowed(NodeId{0}, NodeId{2}));
}
