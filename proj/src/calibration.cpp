#include "covert/calibration.hpp"

#include "covert/parallel.hpp"
#include "covert/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace covert {

std::vector<double> isotonic_non_increasing(std::vector<double> values)
{
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            blocks.back().sum += top.sum;
            blocks.back().count += top.count;
        }
    }
    std::size_t k = 0;
    for (const auto& b : blocks)
        for (std::size_t i = 0; i < b.count; ++i)
            values[k++] = b.mean();
    return values;
}

void CalibrationTable::validate() const
{
    if (snr_grid_db.empty() || obs_grid_bits.empty())
        throw ConfigError("calibration: empty grid");
    if (!std::is_sorted(snr_grid_db.begin(), snr_grid_db.end()) ||
        std::adjacent_find(snr_grid_db.begin(), snr_grid_db.end()) != snr_grid_db.end())
        throw ConfigError("calibration: SNR grid must be strictly increasing");
    if (!std::is_sorted(obs_grid_bits.begin(), obs_grid_bits.end()) ||
        std::adjacent_find(obs_grid_bits.begin(), obs_grid_bits.end()) != obs_grid_bits.end())
        throw ConfigError("calibration: observation grid must be strictly increasing");
    if (obs_grid_bits.front() < 8)
        throw ConfigError("calibration: observations shorter than 8 bits are not supported");
    const std::size_t cells = snr_count() * obs_count();
    if (raw.size() != cells || (!fitted.empty() && fitted.size() != cells))
        throw ConfigError("calibration: cell count does not match the grids");
}

void CalibrationTable::refit()
{
    const std::size_t ns = snr_count();
    const std::size_t no = obs_count();
    fitted.assign(ns * no, 0.0);
    std::vector<double> line;
    for (std::size_t j = 0; j < no; ++j) {
        line.clear();
        for (std::size_t i = 0; i < ns; ++i)
            line.push_back(raw[index(i, j)].dep);
        line = isotonic_non_increasing(std::move(line));
        for (std::size_t i = 0; i < ns; ++i)
            fitted[index(i, j)] = line[i];
    }
    // PAVA is monotone in its input, so rows ordered along SNR stay ordered.
    for (std::size_t i = 0; i < ns; ++i) {
        line.clear();
        for (std::size_t j = 0; j < no; ++j)
            line.push_back(fitted[index(i, j)]);
        line = isotonic_non_increasing(std::move(line));
        for (std::size_t j = 0; j < no; ++j)
            fitted[index(i, j)] = std::clamp(line[j], 0.0, 1.0);
    }
}

nlohmann::json fingerprint(DetectorKind kind, const DetectorModel& model)
{
    const DsssParams& wf = model.waveform;
    return {
        {"detector", to_string(kind)},
        {"spreading_length", wf.spreading_length},
        {"rolloff", wf.rolloff},
        {"samples_per_chip", wf.samples_per_chip},
        {"span_chips", wf.span_chips},
        {"code_seed", model.code_seed},
        {"code", wf.code},
        {"bit_harmonics", model.bit_harmonics},
        {"chip_harmonics", model.chip_harmonics},
        {"scf_smoothing_bit_rates", model.scf_smoothing_bit_rates},
        {"noise_uncertainty_db", model.noise_uncertainty_db},
    };
}

std::string fingerprint_hash(DetectorKind kind, const DetectorModel& model)
{
    // FNV-1a over the canonical (key-sorted) dump.
    const std::string text = fingerprint(kind, model).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string calibration_file_name(DetectorKind kind, const DetectorModel& model)
{
    return "calibration-" + to_string(kind) + "-" + fingerprint_hash(kind, model) + ".json";
}

std::vector<std::size_t> monotonicity_violations(const CalibrationTable& table)
{
    std::vector<std::size_t> out;
    auto exceeds = [&](std::size_t cell, std::size_t reference) {
        const DepPoint& a = table.raw[cell];
        const DepPoint& b = table.raw[reference];
        const double tol = 2.0 * std::hypot(a.ci_halfwidth, b.ci_halfwidth);
        return a.dep - b.dep > tol;
    };
    for (std::size_t j = 0; j < table.obs_count(); ++j) {
        for (std::size_t i = 0; i < table.snr_count(); ++i) {
            const std::size_t cell = table.index(i, j);
            const bool along_snr = i > 0 && exceeds(cell, table.index(i - 1, j));
            const bool along_obs = j > 0 && exceeds(cell, table.index(i, j - 1));
            if (along_snr || along_obs)
                out.push_back(cell);
        }
    }
    return out;
}

CalibrationTable calibrate(DetectorKind kind, const DetectorModel& model, std::vector<double> snr_grid_db,
                           std::vector<int> obs_grid_bits, int trials, std::uint64_t seed,
                           const ProgressFn& progress)
{
    model.validate();
    if (trials < 2)
        throw ConfigError("calibration: need at least two trials per hypothesis");
    CalibrationTable table;
    table.detector = kind;
    table.model = model;
    table.snr_grid_db = std::move(snr_grid_db);
    table.obs_grid_bits = std::move(obs_grid_bits);
    table.trials = trials;
    table.seed = seed;
    const std::size_t cells = table.snr_count() * table.obs_count();
    table.raw.resize(cells);
    table.validate();

    std::size_t done = 0;
    for (std::size_t j = 0; j < table.obs_count(); ++j) {
        for (std::size_t i = 0; i < table.snr_count(); ++i) {
            const double snr_db = table.snr_grid_db[i];
            const int obs = table.obs_grid_bits[j];
            const auto stats = run_trials(kind, model, db_to_linear(snr_db), obs, trials, derive_seed(seed, i, j));
            const auto choice = optimize_threshold(stats);
            DepPoint& p = table.raw[table.index(i, j)];
            p.snr_w_db = snr_db;
            p.obs_bits = obs;
            p.dep = choice.dep;
            p.threshold = choice.threshold;
            p.p_md = choice.p_md;
            p.p_fa = choice.p_fa;
            p.ci_halfwidth = dep_ci_halfwidth(choice, trials);
            if (progress)
                progress(++done, cells);
        }
    }
    table.refit();
    for (std::size_t cell : monotonicity_violations(table)) {
        const DepPoint& p = table.raw[cell];
        std::ostringstream msg;
        msg << "raw DEP " << p.dep << " at " << p.snr_w_db << " dB, " << p.obs_bits
            << " bits exceeds a lower-SNR or shorter-observation neighbour by more than 2 x CI";
        table.warnings.push_back(msg.str());
    }
    return table;
}

namespace {

// Piecewise-linear interpolation of one fitted column in dB, flat outside.
double column_dep(const CalibrationTable& t, std::size_t j, double snr_db)
{
    const auto& g = t.snr_grid_db;
    if (snr_db <= g.front())
        return t.fit(0, j);
    if (snr_db >= g.back())
        return t.fit(g.size() - 1, j);
    const auto hi = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), snr_db) - g.begin());
    const std::size_t lo = hi - 1;
    const double w = (snr_db - g[lo]) / (g[hi] - g[lo]);
    return (1.0 - w) * t.fit(lo, j) + w * t.fit(hi, j);
}

// Largest dB (within the grid) at which column j still reaches `level`;
// nullopt when the level is not crossed inside the grid.
std::optional<double> column_contour(const CalibrationTable& t, std::size_t j, double level)
{
    const auto& g = t.snr_grid_db;
    if (t.fit(0, j) < level || t.fit(g.size() - 1, j) >= level)
        return std::nullopt;
    std::size_t i = g.size() - 1;
    while (t.fit(i, j) < level)
        --i;
    const double a = t.fit(i, j);
    const double b = t.fit(i + 1, j);
    return g[i] + (g[i + 1] - g[i]) * (a - level) / (a - b);
}

// Horizontal shift (dB per octave of observation) between the last two
// columns, averaged over DEP levels both columns cross.
double contour_rate(const CalibrationTable& t)
{
    if (t.obs_count() < 2)
        return 0.0;
    const std::size_t b = t.obs_count() - 1;
    const std::size_t a = b - 1;
    const double octaves = std::log2(static_cast<double>(t.obs_grid_bits[b]) / t.obs_grid_bits[a]);
    double sum = 0.0;
    int count = 0;
    for (int k = 1; k <= 19; ++k) {
        const double level = 0.05 * k;
        const auto sa = column_contour(t, a, level);
        const auto sb = column_contour(t, b, level);
        if (sa && sb) {
            sum += *sa - *sb;
            ++count;
        }
    }
    if (count == 0)
        return 0.0;
    return std::max(0.0, sum / count / octaves);
}

struct Query {
    double dep;
    bool extrapolated;
    bool clamped;
};

Query lookup_db(const CalibrationTable& t, double snr_db, double obs_bits, double rate)
{
    Query q{1.0, false, false};
    const auto& g = t.snr_grid_db;
    const double log_obs = std::log2(obs_bits);
    const double log_first = std::log2(static_cast<double>(t.obs_grid_bits.front()));
    const double log_last = std::log2(static_cast<double>(t.obs_grid_bits.back()));

    if (log_obs > log_last + 1e-12) {
        q.extrapolated = true;
        const double shifted = snr_db + rate * (log_obs - log_last);
        q.clamped = shifted < g.front() || shifted > g.back();
        q.dep = column_dep(t, t.obs_count() - 1, shifted);
        return q;
    }
    q.clamped = snr_db < g.front() || snr_db > g.back() || log_obs < log_first - 1e-12;
    if (log_obs <= log_first || t.obs_count() == 1) {
        q.dep = column_dep(t, 0, snr_db);
        return q;
    }
    std::size_t hi = 1;
    while (hi + 1 < t.obs_count() && std::log2(static_cast<double>(t.obs_grid_bits[hi])) < log_obs)
        ++hi;
    const double la = std::log2(static_cast<double>(t.obs_grid_bits[hi - 1]));
    const double lb = std::log2(static_cast<double>(t.obs_grid_bits[hi]));
    const double w = std::clamp((log_obs - la) / (lb - la), 0.0, 1.0);
    q.dep = (1.0 - w) * column_dep(t, hi - 1, snr_db) + w * column_dep(t, hi, snr_db);
    return q;
}

void require_fit(const CalibrationTable& t)
{
    if (t.fitted.empty() || t.fitted.size() != t.snr_count() * t.obs_count())
        throw MissingCalibrationError("no fitted calibration table; run `covertsim calibrate` first");
}

}  // namespace

DepLookup dep_lookup(const CalibrationTable& table, double snr_w, double obs_bits)
{
    require_fit(table);
    if (!(obs_bits > 0.0))
        throw std::invalid_argument("dep_lookup: observation length must be positive");
    const double snr_db = snr_w > 0.0 ? linear_to_db(snr_w) : -std::numeric_limits<double>::infinity();
    const Query q = lookup_db(table, snr_db, obs_bits, contour_rate(table));
    return {std::clamp(q.dep, 0.0, 1.0), q.extrapolated, q.clamped};
}

SnrLimit invert_dep(const CalibrationTable& table, double dep_reqd, double obs_bits)
{
    require_fit(table);
    if (!(dep_reqd > 0.0 && dep_reqd < 1.0))
        throw ConfigError("dep_reqd must lie in (0, 1)");
    if (!(obs_bits > 0.0))
        throw std::invalid_argument("invert_dep: observation length must be positive");
    const double rate = contour_rate(table);
    const double log_last = std::log2(static_cast<double>(table.obs_grid_bits.back()));
    const double shift = std::max(0.0, std::log2(obs_bits) - log_last) * rate;
    double lo = table.snr_grid_db.front() - shift;
    double hi = table.snr_grid_db.back() - shift;
    const Query at_lo = lookup_db(table, lo, obs_bits, rate);
    if (at_lo.dep < dep_reqd) {
        std::ostringstream msg;
        msg << "requirement exceeds detector-limited covertness: DEP " << dep_reqd << " is above the "
            << to_string(table.detector) << " detector's " << at_lo.dep << " at the lowest calibrated SNR";
        throw InfeasibleError(msg.str());
    }
    SnrLimit out;
    out.extrapolated = at_lo.extrapolated;
    if (lookup_db(table, hi, obs_bits, rate).dep >= dep_reqd) {
        out.snr_w = db_to_linear(hi);
        out.clamped = true;
        return out;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (lookup_db(table, mid, obs_bits, rate).dep >= dep_reqd)
            lo = mid;
        else
            hi = mid;
    }
    out.snr_w = db_to_linear(lo);
    return out;
}

namespace {

// JSON has no infinities; the always-H1 / always-H0 thresholds are spelled out.
nlohmann::json threshold_to_json(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

double threshold_from_json(const nlohmann::json& v)
{
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        throw ConfigError("calibration: bad threshold '" + s + "'");
    }
    return v.get<double>();
}

}  // namespace

nlohmann::json to_json(const CalibrationTable& table)
{
    nlohmann::json raw = nlohmann::json::array();
    for (const auto& p : table.raw)
        raw.push_back({{"snr_w_db", p.snr_w_db},
                       {"obs_bits", p.obs_bits},
                       {"dep", p.dep},
                       {"threshold", threshold_to_json(p.threshold)},
                       {"ci_halfwidth", p.ci_halfwidth},
                       {"p_md", p.p_md},
                       {"p_fa", p.p_fa}});
    return {
        {"format", "covert-calibration/1"},
        {"tool_version", kToolVersion},
        {"detector", to_string(table.detector)},
        {"fingerprint", fingerprint(table.detector, table.model)},
        {"fingerprint_hash", fingerprint_hash(table.detector, table.model)},
        {"chip_rate_hz", table.model.waveform.chip_rate_hz},
        {"snr_grid_db", table.snr_grid_db},
        {"obs_grid_bits", table.obs_grid_bits},
        {"trials", table.trials},
        {"seed", table.seed},
        {"raw", raw},
        {"fitted", table.fitted},
        {"warnings", table.warnings},
    };
}

CalibrationTable calibration_from_json(const nlohmann::json& doc)
{
    try {
        CalibrationTable t;
        const auto& fp = doc.at("fingerprint");
        t.detector = parse_detector_kind(doc.at("detector").get<std::string>());
        DetectorModel& m = t.model;
        m.code_seed = fp.at("code_seed").get<std::uint64_t>();
        m.waveform = DsssParams::make(fp.at("spreading_length").get<int>(), fp.at("samples_per_chip").get<int>(),
                                      fp.at("rolloff").get<double>(), m.code_seed,
                                      doc.value("chip_rate_hz", 1e7), fp.at("span_chips").get<int>());
        m.waveform.code = fp.at("code").get<std::vector<int>>();
        m.bit_harmonics = fp.at("bit_harmonics").get<int>();
        m.chip_harmonics = fp.at("chip_harmonics").get<int>();
        m.scf_smoothing_bit_rates = fp.at("scf_smoothing_bit_rates").get<double>();
        m.noise_uncertainty_db = fp.at("noise_uncertainty_db").get<double>();
        m.validate();
        if (doc.contains("fingerprint_hash") &&
            doc.at("fingerprint_hash").get<std::string>() != fingerprint_hash(t.detector, m))
            throw ConfigError("calibration: fingerprint hash does not match its fingerprint");

        t.snr_grid_db = doc.at("snr_grid_db").get<std::vector<double>>();
        t.obs_grid_bits = doc.at("obs_grid_bits").get<std::vector<int>>();
        t.trials = doc.at("trials").get<int>();
        t.seed = doc.at("seed").get<std::uint64_t>();
        for (const auto& r : doc.at("raw")) {
            DepPoint p;
            p.snr_w_db = r.at("snr_w_db").get<double>();
            p.obs_bits = r.at("obs_bits").get<int>();
            p.dep = r.at("dep").get<double>();
            p.threshold = r.contains("threshold") ? threshold_from_json(r.at("threshold")) : 0.0;
            p.ci_halfwidth = r.value("ci_halfwidth", 0.0);
            p.p_md = r.value("p_md", 0.0);
            p.p_fa = r.value("p_fa", 0.0);
            t.raw.push_back(p);
        }
        t.warnings = doc.value("warnings", std::vector<std::string>{});
        t.validate();
        if (doc.contains("fitted"))
            t.fitted = doc.at("fitted").get<std::vector<double>>();
        else
            t.refit();
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("calibration: malformed document: ") + e.what());
    }
}

void save_calibration(const std::string& path, const CalibrationTable& table)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write calibration file '" + path + "'");
    out << to_json(table).dump(1) << '\n';
    if (!out)
        throw ConfigError("failed writing calibration file '" + path + "'");
}

CalibrationTable load_calibration(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingCalibrationError("calibration file '" + path + "' not found; run `covertsim calibrate` first");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("calibration file '" + path + "': " + e.what());
    }
    return calibration_from_json(doc);
}

}  // namespace covert
