#pragma once

#include "covert/calibration.hpp"
#include "covert/hop_alloc.hpp"
#include "covert/topology.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace covert {

// ---- plain weighted digraphs -------------------------------------------------

struct Arc {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 0.0;
};

struct WeightedGraph {
    std::size_t node_count = 0;
    std::vector<Arc> arcs;
};

struct PathResult {
    std::vector<std::size_t> nodes;  // source first
    std::vector<std::size_t> arcs;   // indices into WeightedGraph::arcs
    double objective = 0.0;          // bottleneck or total weight
};

/// Max-min path. Among equal bottlenecks: fewest hops, then the
/// lexicographically smallest node sequence. Empty when unreachable.
std::optional<PathResult> widest_path(const WeightedGraph& g, std::size_t source, std::size_t target);

/// Minimum total weight (weights must be positive). Same tie-breaking.
std::optional<PathResult> shortest_path(const WeightedGraph& g, std::size_t source, std::size_t target);

// ---- hop graphs ----------------------------------------------------------------

struct HopEdge {
    NodeId tx;
    NodeId rx;
    LinkGains gains;
    HopAllocation alloc;
};

struct HopGraph {
    AllocationMode mode = AllocationMode::covert_max;
    std::size_t node_count = 0;
    NodeId alice;
    NodeId bob;
    std::vector<HopEdge> edges;
    std::optional<SnrLimit> willie_limit;  // latency mode

    /// theta in covert mode, latency in latency mode.
    WeightedGraph weighted() const;
    WeightedGraph weighted(const std::function<double(const HopEdge&)>& weight) const;
};

/// One directed edge per ordered pair whose allocation is feasible. Latency
/// mode needs a table (Willie's SNR cap comes from inverting it at dep_reqd
/// and m_bits); in covert mode a table, if given, fills per-hop DEP.
/// Throws DisconnectedError naming Alice or Bob when either has no edge.
HopGraph build_graph(const Topology& topo, const Constraints& c, AllocationMode mode,
                     const CalibrationTable* table = nullptr);

struct Route {
    AllocationMode mode = AllocationMode::covert_max;
    std::vector<HopEdge> hops;
    std::optional<double> e2e_dep;
    bool dep_extrapolated = false;
    double bottleneck_theta = 0.0;
    double e2e_latency_s = 0.0;
    double max_spreading_gain = 0.0;

    std::size_t hop_count() const { return hops.size(); }
    std::vector<std::size_t> node_sequence() const;
};

/// The weakest hop bounds covertness of the whole route.
double end_to_end_dep(std::span<const double> hop_deps);

/// Fills per-hop DEP from the table at (snr_willie, m_bits) and the
/// end-to-end figures. Without a table DEPs stay empty.
void route_metrics(Route& route, const CalibrationTable* table, double m_bits);

Route route_from_path(const HopGraph& g, const PathResult& path);

/// Widest path on theta (covert mode) or shortest path on latency.
Route solve_route(const HopGraph& g, const CalibrationTable* table, double m_bits);

nlohmann::json route_to_json(const Route& route);

// ---- widest-path equivalence on DEP -------------------------------------------

struct EquivalenceCase {
    std::uint64_t seed = 0;
    bool same_bottleneck_edge = false;
    bool objective_equal = false;
    double theta_route_dep = 0.0;  // min DEP along the theta-widest route
    double dep_route_dep = 0.0;    // bottleneck of the DEP-widest route
};

struct EquivalenceReport {
    std::vector<EquivalenceCase> cases;
    std::size_t objective_matches() const;
};

/// Widest path on theta against widest path on per-edge DEP taken from
/// dep(snr_willie) at the covert-max allocation.
EquivalenceCase compare_widest_objectives(const HopGraph& g, const std::function<double(double)>& dep_of_snr_willie);

/// Runs the comparison over random topologies of `nodes` nodes, one per seed.
EquivalenceReport verify_widest_equivalence(std::size_t nodes, const Constraints& c,
                                            const std::function<double(double)>& dep_of_snr_willie,
                                            std::span<const std::uint64_t> seeds, double area_m = 300.0);

/// Nodes uniform in a square of side `area_m`; Willie uniform as well.
/// Alice is node 0 and Bob the last node.
Topology random_topology(std::size_t nodes, std::uint64_t seed, double area_m = 300.0,
                         PathLossModel model = PathLossModel::with_free_space_reference(900e6));

}  // namespace covert
