#include "covert/routing.hpp"

#include "covert/parallel.hpp"
#include "covert/units.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace covert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<std::size_t>> out_arcs(const WeightedGraph& g)
{
    std::vector<std::vector<std::size_t>> out(g.node_count);
    for (std::size_t k = 0; k < g.arcs.size(); ++k) {
        const Arc& a = g.arcs[k];
        if (a.from >= g.node_count || a.to >= g.node_count)
            throw std::invalid_argument("graph arc references a missing node");
        if (a.from != a.to)
            out[a.from].push_back(k);
    }
    return out;
}

void check_endpoints(const WeightedGraph& g, std::size_t source, std::size_t target)
{
    if (source >= g.node_count || target >= g.node_count)
        throw std::invalid_argument("path endpoint outside the graph");
    if (source == target)
        throw std::invalid_argument("path source equals target");
}

}  // namespace

std::optional<PathResult> widest_path(const WeightedGraph& g, std::size_t source, std::size_t target)
{
    check_endpoints(g, source, target);
    const auto out = out_arcs(g);

    std::vector<double> best(g.node_count, -kInf);
    std::vector<bool> done(g.node_count, false);
    best[source] = kInf;
    std::priority_queue<std::pair<double, std::size_t>> queue;
    queue.push({kInf, source});
    while (!queue.empty()) {
        const auto [width, u] = queue.top();
        queue.pop();
        if (done[u])
            continue;
        done[u] = true;
        for (std::size_t k : out[u]) {
            const Arc& a = g.arcs[k];
            const double w = std::min(width, a.weight);
            if (w > best[a.to]) {
                best[a.to] = w;
                queue.push({w, a.to});
            }
        }
    }
    if (!done[target])
        return std::nullopt;
    const double bottleneck = best[target];

    // Among arcs at least as wide as the optimum: fewest hops, smallest sequence.
    std::vector<std::vector<std::size_t>> in(g.node_count);
    for (std::size_t k = 0; k < g.arcs.size(); ++k)
        if (g.arcs[k].weight >= bottleneck && g.arcs[k].from != g.arcs[k].to)
            in[g.arcs[k].to].push_back(k);
    std::vector<std::size_t> hops_to_target(g.node_count, std::numeric_limits<std::size_t>::max());
    hops_to_target[target] = 0;
    std::deque<std::size_t> frontier{target};
    while (!frontier.empty()) {
        const std::size_t v = frontier.front();
        frontier.pop_front();
        for (std::size_t k : in[v]) {
            const std::size_t u = g.arcs[k].from;
            if (hops_to_target[u] == std::numeric_limits<std::size_t>::max()) {
                hops_to_target[u] = hops_to_target[v] + 1;
                frontier.push_back(u);
            }
        }
    }

    PathResult r;
    r.nodes.push_back(source);
    r.objective = kInf;
    std::size_t u = source;
    while (u != target) {
        std::optional<std::size_t> pick;
        for (std::size_t k : out[u]) {
            const Arc& a = g.arcs[k];
            if (a.weight < bottleneck || hops_to_target[a.to] + 1 != hops_to_target[u])
                continue;
            if (!pick || a.to < g.arcs[*pick].to ||
                (a.to == g.arcs[*pick].to && a.weight > g.arcs[*pick].weight))
                pick = k;
        }
        const Arc& a = g.arcs[*pick];
        r.arcs.push_back(*pick);
        r.nodes.push_back(a.to);
        r.objective = std::min(r.objective, a.weight);
        u = a.to;
    }
    return r;
}

std::optional<PathResult> shortest_path(const WeightedGraph& g, std::size_t source, std::size_t target)
{
    check_endpoints(g, source, target);
    for (const Arc& a : g.arcs)
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw std::invalid_argument("shortest_path: arc weights must be positive and finite");
    const auto out = out_arcs(g);

    struct Label {
        double dist;
        std::vector<std::size_t> nodes;
        std::vector<std::size_t> arcs;
    };
    // Ordering: distance, then hop count, then node sequence.
    auto better = [](const Label& a, const Label& b) {
        if (a.dist != b.dist)
            return a.dist < b.dist;
        if (a.nodes.size() != b.nodes.size())
            return a.nodes.size() < b.nodes.size();
        return a.nodes < b.nodes;
    };
    auto worse = [&](const Label& a, const Label& b) { return better(b, a); };

    std::vector<std::optional<Label>> best(g.node_count);
    std::vector<bool> done(g.node_count, false);
    std::priority_queue<Label, std::vector<Label>, decltype(worse)> queue(worse);
    best[source] = Label{0.0, {source}, {}};
    queue.push(*best[source]);
    while (!queue.empty()) {
        Label top = queue.top();
        queue.pop();
        const std::size_t u = top.nodes.back();
        if (done[u])
            continue;
        done[u] = true;
        if (u == target)
            break;
        for (std::size_t k : out[u]) {
            const Arc& a = g.arcs[k];
            if (done[a.to])
                continue;
            Label next{top.dist + a.weight, top.nodes, top.arcs};
            next.nodes.push_back(a.to);
            next.arcs.push_back(k);
            if (!best[a.to] || better(next, *best[a.to])) {
                best[a.to] = next;
                queue.push(std::move(next));
            }
        }
    }
    if (!done[target])
        return std::nullopt;
    return PathResult{best[target]->nodes, best[target]->arcs, best[target]->dist};
}

WeightedGraph HopGraph::weighted() const
{
    return weighted([this](const HopEdge& e) {
        return mode == AllocationMode::covert_max ? e.alloc.theta : e.alloc.latency_s;
    });
}

WeightedGraph HopGraph::weighted(const std::function<double(const HopEdge&)>& weight) const
{
    WeightedGraph g;
    g.node_count = node_count;
    g.arcs.reserve(edges.size());
    for (const auto& e : edges)
        g.arcs.push_back({e.tx.index, e.rx.index, weight(e)});
    return g;
}

HopGraph build_graph(const Topology& topo, const Constraints& c, AllocationMode mode, const CalibrationTable* table)
{
    c.validate();
    HopGraph g;
    g.mode = mode;
    g.node_count = topo.node_count();
    g.alice = topo.alice();
    g.bob = topo.bob();

    if (mode == AllocationMode::latency_min) {
        if (table == nullptr)
            throw MissingCalibrationError("latency-min routing needs a detector calibration; run `covertsim calibrate`");
        g.willie_limit = invert_dep(*table, c.dep_reqd, c.m_bits);
    }

    const std::size_t n = g.node_count;
    std::vector<std::optional<HopEdge>> slots(n * n);
    parallel_for(n * n, [&](std::size_t k) {
        const NodeId tx{k / n};
        const NodeId rx{k % n};
        if (tx == rx || !topo.link_allowed(tx, rx))
            return;
        HopEdge e{tx, rx, {topo.link_gain(tx, Endpoint::to(rx)), topo.link_gain(tx, Endpoint::willie())}, {}};
        try {
            e.alloc = mode == AllocationMode::covert_max ? allocate_covert_max(e.gains, c)
                                                         : allocate_latency_min(e.gains, c, g.willie_limit->snr_w);
        } catch (const InfeasibleError&) {
            return;
        }
        if (table != nullptr) {
            const DepLookup d = dep_lookup(*table, e.alloc.snr_willie, c.m_bits);
            e.alloc.dep_estimate = d.dep;
            e.alloc.dep_extrapolated = d.extrapolated;
        }
        slots[k] = std::move(e);
    });
    for (auto& s : slots)
        if (s)
            g.edges.push_back(std::move(*s));

    const bool alice_out = std::any_of(g.edges.begin(), g.edges.end(), [&](const HopEdge& e) { return e.tx == g.alice; });
    const bool bob_in = std::any_of(g.edges.begin(), g.edges.end(), [&](const HopEdge& e) { return e.rx == g.bob; });
    if (!alice_out || !bob_in) {
        std::ostringstream msg;
        msg << "disconnected: no feasible link ";
        if (!alice_out)
            msg << "out of Alice (node " << g.alice.index << ")";
        if (!alice_out && !bob_in)
            msg << " and none ";
        if (!bob_in)
            msg << "into Bob (node " << g.bob.index << ")";
        throw DisconnectedError(msg.str());
    }
    return g;
}

std::vector<std::size_t> Route::node_sequence() const
{
    std::vector<std::size_t> seq;
    if (hops.empty())
        return seq;
    seq.push_back(hops.front().tx.index);
    for (const auto& h : hops)
        seq.push_back(h.rx.index);
    return seq;
}

double end_to_end_dep(std::span<const double> hop_deps)
{
    if (hop_deps.empty())
        throw std::invalid_argument("end_to_end_dep: route has no hops");
    return *std::min_element(hop_deps.begin(), hop_deps.end());
}

void route_metrics(Route& route, const CalibrationTable* table, double m_bits)
{
    if (route.hops.empty())
        throw std::invalid_argument("route_metrics: route has no hops");
    route.bottleneck_theta = kInf;
    route.e2e_latency_s = 0.0;
    route.max_spreading_gain = 0.0;
    route.dep_extrapolated = false;
    std::vector<double> deps;
    for (auto& h : route.hops) {
        route.bottleneck_theta = std::min(route.bottleneck_theta, h.alloc.theta);
        route.e2e_latency_s += h.alloc.latency_s;
        route.max_spreading_gain = std::max(route.max_spreading_gain, h.alloc.spreading_gain);
        if (table != nullptr) {
            const DepLookup d = dep_lookup(*table, h.alloc.snr_willie, m_bits);
            h.alloc.dep_estimate = d.dep;
            h.alloc.dep_extrapolated = d.extrapolated;
            route.dep_extrapolated = route.dep_extrapolated || d.extrapolated;
            deps.push_back(d.dep);
        } else {
            h.alloc.dep_estimate.reset();
            h.alloc.dep_extrapolated = false;
        }
    }
    if (deps.empty())
        route.e2e_dep.reset();
    else
        route.e2e_dep = end_to_end_dep(deps);
}

Route route_from_path(const HopGraph& g, const PathResult& path)
{
    Route r;
    r.mode = g.mode;
    for (std::size_t k : path.arcs)
        r.hops.push_back(g.edges[k]);
    return r;
}

Route solve_route(const HopGraph& g, const CalibrationTable* table, double m_bits)
{
    const WeightedGraph w = g.weighted();
    const auto path = g.mode == AllocationMode::covert_max ? widest_path(w, g.alice.index, g.bob.index)
                                                           : shortest_path(w, g.alice.index, g.bob.index);
    if (!path)
        throw DisconnectedError("disconnected: no feasible route from Alice to Bob");
    Route r = route_from_path(g, *path);
    route_metrics(r, table, m_bits);
    return r;
}

nlohmann::json route_to_json(const Route& route)
{
    auto optional_number = [](const std::optional<double>& v) -> nlohmann::json {
        return v ? nlohmann::json(*v) : nlohmann::json("n/a");
    };
    nlohmann::json hops = nlohmann::json::array();
    for (const auto& h : route.hops) {
        const HopAllocation& a = h.alloc;
        hops.push_back({
            {"tx", h.tx.index},
            {"rx", h.rx.index},
            {"power_dbm", watts_to_dbm(a.power_w)},
            {"bandwidth_hz", a.bandwidth_hz},
            {"spreading_gain", a.spreading_gain},
            {"data_rate_bps", a.data_rate_bps},
            {"latency_s", a.latency_s},
            {"snr_rx_db", linear_to_db(a.snr_rx)},
            {"snr_willie_db", linear_to_db(a.snr_willie)},
            {"theta_db", linear_to_db(a.theta)},
            {"dep", optional_number(a.dep_estimate)},
            {"dep_extrapolated", a.dep_extrapolated},
        });
    }
    return {
        {"mode", to_string(route.mode)},
        {"hops", hops},
        {"summary",
         {
             {"nodes", route.node_sequence()},
             {"hop_count", route.hop_count()},
             {"e2e_dep", optional_number(route.e2e_dep)},
             {"dep_extrapolated", route.dep_extrapolated},
             {"bottleneck_theta_db", linear_to_db(route.bottleneck_theta)},
             {"e2e_latency_s", route.e2e_latency_s},
             {"max_spreading_gain", route.max_spreading_gain},
         }},
    };
}

std::size_t EquivalenceReport::objective_matches() const
{
    return static_cast<std::size_t>(
        std::count_if(cases.begin(), cases.end(), [](const EquivalenceCase& c) { return c.objective_equal; }));
}

EquivalenceCase compare_widest_objectives(const HopGraph& g, const std::function<double(double)>& dep_of_snr_willie)
{
    if (g.mode != AllocationMode::covert_max)
        throw std::invalid_argument("widest-path comparison needs a covert-max graph");
    const WeightedGraph on_theta = g.weighted();
    const WeightedGraph on_dep = g.weighted([&](const HopEdge& e) { return dep_of_snr_willie(e.alloc.snr_willie); });
    const auto a = widest_path(on_theta, g.alice.index, g.bob.index);
    const auto b = widest_path(on_dep, g.alice.index, g.bob.index);
    if (!a || !b)
        throw DisconnectedError("disconnected: no feasible route from Alice to Bob");

    auto weakest = [](const WeightedGraph& w, const PathResult& p) {
        std::size_t pick = p.arcs.front();
        for (std::size_t k : p.arcs)
            if (w.arcs[k].weight < w.arcs[pick].weight)
                pick = k;
        return pick;
    };
    EquivalenceCase out;
    out.theta_route_dep = kInf;
    for (std::size_t k : a->arcs)
        out.theta_route_dep = std::min(out.theta_route_dep, on_dep.arcs[k].weight);
    out.dep_route_dep = b->objective;
    out.objective_equal = std::abs(out.theta_route_dep - out.dep_route_dep) <= 1e-12;
    out.same_bottleneck_edge = weakest(on_theta, *a) == weakest(on_dep, *b);
    return out;
}

EquivalenceReport verify_widest_equivalence(std::size_t nodes, const Constraints& c,
                                            const std::function<double(double)>& dep_of_snr_willie,
                                            std::span<const std::uint64_t> seeds, double area_m)
{
    EquivalenceReport report;
    for (std::uint64_t seed : seeds) {
        // Redraw until Alice can reach Bob; the seed recorded is the one used.
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == 1000)
                throw InfeasibleError("could not draw a connected random topology");
            const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, attempt);
            try {
                const HopGraph g = build_graph(random_topology(nodes, s, area_m), c, AllocationMode::covert_max);
                EquivalenceCase cs = compare_widest_objectives(g, dep_of_snr_willie);
                cs.seed = s;
                report.cases.push_back(cs);
                break;
            } catch (const DisconnectedError&) {
            }
        }
    }
    return report;
}

Topology random_topology(std::size_t nodes, std::uint64_t seed, double area_m, PathLossModel model)
{
    if (nodes < 2)
        throw ConfigError("random topology needs at least two nodes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, area_m);
    std::vector<Vec3> pos(nodes);
    for (auto& p : pos)
        p = {coord(rng), coord(rng), 0.0};
    const Vec3 willie{coord(rng), coord(rng), 0.0};
    return Topology(std::move(pos), willie, NodeId{0}, NodeId{nodes - 1}, model);
}

}  // namespace covert
