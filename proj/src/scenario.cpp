#include "covert/scenario.hpp"

#include "covert/routing.hpp"
#include "covert/units.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace covert {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
public:
    Section(const json& obj, std::string where) : obj_(obj), where_(std::move(where))
    {
        if (!obj_.is_object())
            throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    template <typename T>
    T get(const std::string& key) const
    {
        if (!obj_.contains(key))
            throw ConfigError(name(key) + ": required key missing");
        used_.insert(key);
        try {
            return obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(name(key) + ": wrong type");
        }
    }

    template <typename T>
    T get(const std::string& key, T fallback) const
    {
        return has(key) ? get<T>(key) : fallback;
    }

    const json& raw(const std::string& key) const
    {
        if (!obj_.contains(key))
            throw ConfigError(name(key) + ": required key missing");
        used_.insert(key);
        return obj_.at(key);
    }

    std::string name(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const
    {
        for (const auto& [key, value] : obj_.items())
            if (!used_.count(key))
                throw ConfigError(name(key) + ": unknown key");
    }

private:
    const json& obj_;
    std::string where_;
    mutable std::set<std::string> used_;
};

Vec3 parse_vec3(const json& v, const std::string& where)
{
    if (!v.is_array() || (v.size() != 2 && v.size() != 3))
        throw ConfigError(where + ": expected [x, y] or [x, y, z] in meters");
    Vec3 out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(where + ": coordinates must be numbers");
        out[i] = v[i].get<double>();
    }
    return out;
}

std::vector<DetectorKind> parse_detectors(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty())
        throw ConfigError(where + ": expected a non-empty list of detector names");
    std::vector<DetectorKind> out;
    for (const auto& item : v) {
        if (!item.is_string())
            throw ConfigError(where + ": detector names must be strings");
        const DetectorKind k = parse_detector_kind(item.get<std::string>());
        if (std::find(out.begin(), out.end(), k) != out.end())
            throw ConfigError(where + ": detector listed twice");
        out.push_back(k);
    }
    return out;
}

template <typename T>
void require_sorted(const std::vector<T>& v, const std::string& where)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i]))
            throw ConfigError(where + ": grid must be strictly increasing");
}

std::vector<double> parse_grid(const json& v, const std::string& where)
{
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& x : v) {
            if (!x.is_number())
                throw ConfigError(where + ": grid entries must be numbers");
            out.push_back(x.get<double>());
        }
    } else if (v.is_object()) {
        Section s(v, where);
        const double start = s.get<double>("start");
        const double stop = s.get<double>("stop");
        const double step = s.get<double>("step");
        s.finish();
        if (!(step > 0.0) || stop < start)
            throw ConfigError(where + ": need step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i)
            out.push_back(start + step * static_cast<double>(i));
    } else {
        throw ConfigError(where + ": expected a list or {start, stop, step}");
    }
    require_sorted(out, where);
    return out;
}

PathLossModel parse_path_loss(const json& v, const std::string& where)
{
    Section s(v, where);
    const double fc = s.get<double>("carrier_frequency_hz", 900e6);
    const double exponent = s.get<double>("exponent", 3.0);
    const double d0 = s.get<double>("reference_distance_m", 1.0);
    PathLossModel m;
    try {
        m = PathLossModel::with_free_space_reference(fc, exponent, d0);
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (s.has("reference_gain_db"))
        m.reference_gain_db = s.get<double>("reference_gain_db");
    s.finish();
    m.validate();
    return m;
}

TopologySpec parse_topology(const json& v, const std::filesystem::path& base)
{
    Section s(v, "topology");
    TopologySpec t;
    const std::string kind = s.get<std::string>("kind", "grid");
    if (kind == "grid") {
        t.kind = TopologySpec::Kind::grid;
        t.nx = s.get<int>("nx", 6);
        t.ny = s.get<int>("ny", 6);
        t.spacing_m = s.get<double>("spacing_m", 50.0);
        if (t.nx < 1 || t.ny < 1 || t.nx * t.ny < 2 || !(t.spacing_m > 0.0))
            throw ConfigError("topology: grid needs at least two nodes and positive spacing_m");
    } else if (kind == "positions") {
        t.kind = TopologySpec::Kind::positions;
        const json& nodes = s.raw("nodes_m");
        if (!nodes.is_array())
            throw ConfigError("topology.nodes_m: expected a list of positions");
        for (std::size_t i = 0; i < nodes.size(); ++i)
            t.nodes_m.push_back(parse_vec3(nodes[i], "topology.nodes_m[" + std::to_string(i) + "]"));
        t.alice = s.get<std::size_t>("alice", 0);
        if (s.has("bob"))
            t.bob = s.get<std::size_t>("bob");
    } else if (kind == "random") {
        t.kind = TopologySpec::Kind::random;
        t.random_nodes = s.get<std::size_t>("nodes", 8);
        t.area_m = s.get<double>("area_m", 300.0);
        t.random_seed = s.get<std::uint64_t>("seed", 1);
        if (t.random_nodes < 2 || !(t.area_m > 0.0))
            throw ConfigError("topology: random layout needs nodes >= 2 and area_m > 0");
    } else {
        throw ConfigError("topology.kind: expected grid, positions or random");
    }
    if (s.has("willie_position_m"))
        t.willie_m = parse_vec3(s.raw("willie_position_m"), "topology.willie_position_m");
    if (s.has("path_loss"))
        t.path_loss = parse_path_loss(s.raw("path_loss"), "topology.path_loss");
    if (s.has("max_link_distance_m")) {
        t.max_link_distance_m = s.get<double>("max_link_distance_m");
        if (!(*t.max_link_distance_m > 0.0))
            throw ConfigError("topology.max_link_distance_m: must be positive");
    }
    if (s.has("gain_csv")) {
        t.gain_csv = base / s.get<std::string>("gain_csv");
        if (!std::filesystem::exists(*t.gain_csv))
            throw ConfigError("topology.gain_csv: file '" + t.gain_csv->string() + "' does not exist");
    }
    s.finish();
    return t;
}

Constraints parse_constraints(const json& v)
{
    Section s(v, "constraints");
    Constraints c;
    c.d_reqd_bps = s.get<double>("d_reqd_bps", c.d_reqd_bps);
    if (s.has("snr_reqd_db") && s.has("ber_reqd"))
        throw ConfigError("constraints: give either snr_reqd_db or ber_reqd, not both");
    if (s.has("ber_reqd")) {
        const double b = s.get<double>("ber_reqd");
        if (!(b > 0.0 && b < 0.5))
            throw ConfigError("constraints.ber_reqd: must lie in (0, 0.5)");
        c.snr_reqd = snr_for_ber(b);
    } else {
        c.snr_reqd = db_to_linear(s.get<double>("snr_reqd_db", 10.0));
    }
    c.dep_reqd = s.get<double>("dep_reqd", c.dep_reqd);
    c.omega_max_hz = s.get<double>("omega_max_hz", c.omega_max_hz);
    if (s.has("p_max_w") && s.has("p_max_dbm"))
        throw ConfigError("constraints: give either p_max_w or p_max_dbm, not both");
    if (s.has("p_max_dbm"))
        c.p_max_w = dbm_to_watts(s.get<double>("p_max_dbm"));
    else
        c.p_max_w = s.get<double>("p_max_w", c.p_max_w);
    c.n0_w_per_hz = dbm_to_watts(s.get<double>("n0_dbm_per_hz", -113.0));
    c.m_bits = s.get<double>("m_bits", c.m_bits);
    s.finish();
    c.validate();
    return c;
}

DetectorModel parse_detector_model(const json* waveform, const json* detector)
{
    int length = 7;
    int spc = 4;
    double rolloff = 1.0;
    int span = 8;
    std::uint64_t code_seed = 1;
    double chip_rate = 1e7;
    if (waveform != nullptr) {
        Section s(*waveform, "waveform");
        length = s.get<int>("spreading_length", length);
        spc = s.get<int>("samples_per_chip", spc);
        rolloff = s.get<double>("rolloff", rolloff);
        span = s.get<int>("span_chips", span);
        code_seed = s.get<std::uint64_t>("code_seed", code_seed);
        chip_rate = s.get<double>("chip_rate_hz", chip_rate);
        s.finish();
    }
    DetectorModel m;
    try {
        m.waveform = DsssParams::make(length, spc, rolloff, code_seed, chip_rate, span);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("waveform: ") + e.what());
    }
    m.code_seed = code_seed;
    if (detector != nullptr) {
        Section s(*detector, "detector_model");
        m.bit_harmonics = s.get<int>("bit_harmonics", m.bit_harmonics);
        m.chip_harmonics = s.get<int>("chip_harmonics", m.chip_harmonics);
        m.scf_smoothing_bit_rates = s.get<double>("scf_smoothing_bit_rates", m.scf_smoothing_bit_rates);
        m.noise_uncertainty_db = s.get<double>("noise_uncertainty_db", m.noise_uncertainty_db);
        s.finish();
    }
    m.validate();
    return m;
}

}  // namespace

std::string to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::dep_reqd:
        return "dep_reqd";
    case SweepParam::m_bits:
        return "m_bits";
    case SweepParam::d_reqd_bps:
        return "d_reqd_bps";
    }
    return "?";
}

std::vector<double> default_snr_grid_db()
{
    std::vector<double> g;
    for (int k = 0; k <= 12; ++k)
        g.push_back(-25.0 + 2.5 * k);
    return g;
}

ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    Section root(doc, "");
    ScenarioConfig cfg;
    cfg.base_dir = base_dir;
    cfg.seed = root.get<std::uint64_t>("seed", 1);
    if (root.has("topology"))
        cfg.topology = parse_topology(root.raw("topology"), base_dir);
    if (root.has("constraints"))
        cfg.constraints = parse_constraints(root.raw("constraints"));
    const std::string mode = root.get<std::string>("mode", "covert_max");
    if (mode == "covert_max")
        cfg.mode = AllocationMode::covert_max;
    else if (mode == "latency_min")
        cfg.mode = AllocationMode::latency_min;
    else
        throw ConfigError("mode: expected covert_max or latency_min");
    cfg.detector = parse_detector_kind(root.get<std::string>("detector", "cycle"));
    cfg.detector_model = parse_detector_model(root.has("waveform") ? &root.raw("waveform") : nullptr,
                                              root.has("detector_model") ? &root.raw("detector_model") : nullptr);

    cfg.calibration.snr_grid_db = default_snr_grid_db();
    if (root.has("calibration")) {
        Section s(root.raw("calibration"), "calibration");
        if (s.has("snr_grid_db"))
            cfg.calibration.snr_grid_db = parse_grid(s.raw("snr_grid_db"), "calibration.snr_grid_db");
        if (s.has("obs_grid_bits")) {
            cfg.calibration.obs_grid_bits = s.get<std::vector<int>>("obs_grid_bits");
            require_sorted(cfg.calibration.obs_grid_bits, "calibration.obs_grid_bits");
            if (cfg.calibration.obs_grid_bits.empty() || cfg.calibration.obs_grid_bits.front() < 8)
                throw ConfigError("calibration.obs_grid_bits: need at least one entry, each >= 8");
        }
        cfg.calibration.trials = s.get<int>("trials", cfg.calibration.trials);
        if (cfg.calibration.trials < 2)
            throw ConfigError("calibration.trials: need at least 2");
        if (s.has("detectors"))
            cfg.calibration.detectors = parse_detectors(s.raw("detectors"), "calibration.detectors");
        if (s.has("dir"))
            cfg.calibration.dir = base_dir / s.get<std::string>("dir");
        s.finish();
    }
    if (cfg.calibration.snr_grid_db.empty())
        throw ConfigError("calibration.snr_grid_db: grid is empty");

    if (root.has("sweep")) {
        Section s(root.raw("sweep"), "sweep");
        SweepSpec sw;
        const std::string param = s.get<std::string>("param");
        if (param == "dep_reqd")
            sw.param = SweepParam::dep_reqd;
        else if (param == "m_bits")
            sw.param = SweepParam::m_bits;
        else if (param == "d_reqd_bps")
            sw.param = SweepParam::d_reqd_bps;
        else
            throw ConfigError("sweep.param: expected dep_reqd, m_bits or d_reqd_bps");
        if (!s.has("values"))
            throw ConfigError("sweep.values: sweep grid required");
        sw.values = parse_grid(s.raw("values"), "sweep.values");
        if (sw.values.empty())
            throw ConfigError("sweep.values: sweep grid required");
        sw.detectors = s.has("detectors") ? parse_detectors(s.raw("detectors"), "sweep.detectors")
                                          : std::vector<DetectorKind>{cfg.detector};
        s.finish();
        cfg.sweep = std::move(sw);
    }
    if (root.has("allocate")) {
        Section s(root.raw("allocate"), "allocate");
        cfg.allocate.tx = s.get<std::size_t>("tx", 0);
        cfg.allocate.rx = s.get<std::size_t>("rx", 1);
        s.finish();
    }
    root.finish();
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return parse_scenario(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

Topology build_topology(const ScenarioConfig& cfg)
{
    const TopologySpec& t = cfg.topology;
    auto built = [&]() -> Topology {
        try {
            switch (t.kind) {
            case TopologySpec::Kind::grid:
                return grid_topology(t.nx, t.ny, t.spacing_m, t.willie_m, t.path_loss);
            case TopologySpec::Kind::positions: {
                if (t.nodes_m.size() < 2)
                    throw ConfigError("topology.nodes_m: need at least two nodes");
                const std::size_t bob = t.bob.value_or(t.nodes_m.size() - 1);
                if (t.alice >= t.nodes_m.size() || bob >= t.nodes_m.size())
                    throw ConfigError("topology: alice/bob index outside the node list");
                return Topology(t.nodes_m, t.willie_m, NodeId{t.alice}, NodeId{bob}, t.path_loss);
            }
            case TopologySpec::Kind::random:
                return random_topology(t.random_nodes, t.random_seed, t.area_m, t.path_loss);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("topology: ") + e.what());
        }
        throw ConfigError("topology: unsupported kind");
    }();
    Topology topo = built.with_max_link_distance(t.max_link_distance_m);
    if (t.gain_csv)
        topo = topo.with_imported_gains(t.gain_csv->string());
    return topo;
}

nlohmann::json topology_to_json(const Topology& topo)
{
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t i = 0; i < topo.node_count(); ++i) {
        const Vec3& p = topo.position(NodeId{i});
        nodes.push_back({{"id", i}, {"position_m", {p[0], p[1], p[2]}}});
    }
    const Vec3& w = topo.willie_position();
    return {
        {"nodes", nodes},
        {"willie_position_m", {w[0], w[1], w[2]}},
        {"alice", topo.alice().index},
        {"bob", topo.bob().index},
        {"gain_source", topo.gain_source() == GainSource::imported ? "imported" : "model"},
    };
}

}  // namespace covert
