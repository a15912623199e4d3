#include "covert/topology.hpp"

#include "covert/units.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace covert {

double distance(const Vec3& a, const Vec3& b)
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

PathLossModel PathLossModel::with_free_space_reference(double carrier_frequency_hz,
                                                       double exponent,
                                                       double reference_distance_m)
{
    const double wavelength = kSpeedOfLight / carrier_frequency_hz;
    const double ratio = wavelength / (4.0 * std::numbers::pi * reference_distance_m);
    PathLossModel m;
    m.reference_gain_db = linear_to_db(ratio * ratio);
    m.reference_distance_m = reference_distance_m;
    m.exponent = exponent;
    m.carrier_frequency_hz = carrier_frequency_hz;
    return m;
}

void PathLossModel::validate() const
{
    if (!(exponent >= 1.0))
        throw ConfigError("path loss exponent must be >= 1");
    if (!(reference_distance_m > 0.0))
        throw ConfigError("path loss reference distance must be positive");
    if (!std::isfinite(reference_gain_db))
        throw ConfigError("path loss reference gain must be finite");
}

double PathLossModel::gain(double distance_m) const
{
    if (!(distance_m > 0.0))
        throw std::invalid_argument("path loss: distance must be positive");
    return db_to_linear(reference_gain_db) * std::pow(distance_m / reference_distance_m, -exponent);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' '))
            c.pop_back();
        while (!c.empty() && c.front() == ' ')
            c.erase(c.begin());
    }
    return cells;
}

std::optional<double> parse_double(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        return std::nullopt;
    return v;
}

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

GainTable read_gain_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("gain csv: empty file");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header.back() != "willie")
        throw ConfigError("gain csv: header must be node_0,...,node_{N-1},willie");
    const std::size_t n = header.size() - 1;
    for (std::size_t j = 0; j < n; ++j) {
        if (header[j] != "node_" + std::to_string(j))
            throw ConfigError("gain csv: header column " + std::to_string(j) + " must be node_" +
                              std::to_string(j));
    }

    GainTable table;
    table.node_count = n;
    table.node_db.assign(n * n, 0.0);
    table.willie_db.assign(n, 0.0);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r")
            continue;
        const std::string where = "gain csv row " + std::to_string(row + 1);
        if (row >= n)
            throw ConfigError(where + ": more rows than columns in header");
        const auto cells = split_csv_line(line);
        if (cells.size() != n + 1)
            throw ConfigError(where + ": expected " + std::to_string(n + 1) + " cells, got " +
                              std::to_string(cells.size()));
        for (std::size_t j = 0; j <= n; ++j) {
            if (j == row)
                continue;  // diagonal
            const auto v = parse_double(cells[j]);
            const std::string cell = where + ", column " + header[j];
            if (!v)
                throw ConfigError(cell + ": not a number: '" + cells[j] + "'");
            if (!std::isfinite(*v))
                throw ConfigError(cell + ": gain must be finite (got " + cells[j] + ")");
            if (j < n)
                table.node_db[row * n + j] = *v;
            else
                table.willie_db[row] = *v;
        }
        ++row;
    }
    if (row != n)
        throw ConfigError("gain csv: expected " + std::to_string(n) + " rows, got " +
                          std::to_string(row));
    return table;
}

GainTable read_gain_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open gain csv: " + path);
    return read_gain_csv(in);
}

void write_gain_csv(std::ostream& out, const GainTable& table)
{
    const std::size_t n = table.node_count;
    for (std::size_t j = 0; j < n; ++j)
        out << "node_" << j << ',';
    out << "willie\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            out << format_double(i == j ? 0.0 : table.node_db[i * n + j]) << ',';
        out << format_double(table.willie_db[i]) << '\n';
    }
}

void write_gain_csv(const std::string& path, const GainTable& table)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write gain csv: " + path);
    write_gain_csv(out, table);
}

Topology::Topology(std::vector<Vec3> positions, Vec3 willie_position, NodeId alice, NodeId bob,
                   PathLossModel model)
    : positions_(std::move(positions)), willie_(willie_position), alice_(alice), bob_(bob),
      model_(model)
{
    if (positions_.size() < 2)
        throw ConfigError("topology needs at least two nodes");
    if (alice_ == bob_)
        throw ConfigError("alice and bob must be distinct nodes");
    check_node(alice_);
    check_node(bob_);
    auto finite = [](const Vec3& p) {
        return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
    };
    for (const auto& p : positions_)
        if (!finite(p))
            throw ConfigError("node position is not finite");
    if (!finite(willie_))
        throw ConfigError("willie position is not finite");
    model_.validate();
}

void Topology::check_node(NodeId id) const
{
    if (id.index >= positions_.size())
        throw std::out_of_range("unknown node id " + std::to_string(id.index));
}

const Vec3& Topology::position(NodeId id) const
{
    check_node(id);
    return positions_[id.index];
}

double Topology::link_gain(NodeId tx, Endpoint rx) const
{
    check_node(tx);
    if (!rx.is_willie()) {
        check_node(*rx.node);
        if (*rx.node == tx)
            throw std::invalid_argument("link_gain: tx and rx are the same node");
    }
    if (imported_) {
        const double db = rx.is_willie() ? imported_->willie_db[tx.index]
                                         : imported_->node_db[tx.index * node_count() + rx.node->index];
        return db_to_linear(db);
    }
    const Vec3& to = rx.is_willie() ? willie_ : positions_[rx.node->index];
    return model_.gain(distance(positions_[tx.index], to));
}

Topology Topology::with_imported_gains(GainTable table) const
{
    if (table.node_count != node_count() || table.node_db.size() != node_count() * node_count() ||
        table.willie_db.size() != node_count())
        throw ConfigError("imported gain table is " + std::to_string(table.node_count) + " nodes, topology has " +
                          std::to_string(node_count()));
    for (std::size_t i = 0; i < node_count(); ++i) {
        for (std::size_t j = 0; j < node_count(); ++j)
            if (i != j && !std::isfinite(table.node_db[i * node_count() + j]))
                throw ConfigError("imported gain (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is not finite");
        if (!std::isfinite(table.willie_db[i]))
            throw ConfigError("imported willie gain for node " + std::to_string(i) + " is not finite");
    }
    Topology t = *this;
    t.imported_ = std::move(table);
    return t;
}

Topology Topology::with_imported_gains(const std::string& csv_path) const
{
    return with_imported_gains(read_gain_csv(csv_path));
}

GainTable Topology::gain_table() const
{
    if (imported_)
        return *imported_;
    const std::size_t n = node_count();
    GainTable t;
    t.node_count = n;
    t.node_db.assign(n * n, 0.0);
    t.willie_db.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                t.node_db[i * n + j] = linear_to_db(link_gain(NodeId{i}, Endpoint::to(NodeId{j})));
        t.willie_db[i] = linear_to_db(link_gain(NodeId{i}, Endpoint::willie()));
    }
    return t;
}

Topology Topology::with_max_link_distance(std::optional<double> meters) const
{
    if (meters && !(*meters > 0.0))
        throw ConfigError("max link distance must be positive");
    Topology t = *this;
    t.max_link_distance_ = meters;
    return t;
}

bool Topology::link_allowed(NodeId tx, NodeId rx) const
{
    check_node(tx);
    check_node(rx);
    if (tx == rx)
        return false;
    if (!max_link_distance_)
        return true;
    return distance(positions_[tx.index], positions_[rx.index]) <= *max_link_distance_;
}

Topology grid_topology(int nx, int ny, double spacing_m, Vec3 willie_position, PathLossModel model)
{
    if (nx < 1 || ny < 1 || nx * ny < 2)
        throw ConfigError("grid topology needs nx * ny >= 2");
    if (!(spacing_m > 0.0))
        throw ConfigError("grid spacing must be positive");
    std::vector<Vec3> positions;
    positions.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            positions.push_back({i * spacing_m, j * spacing_m, 0.0});
    const NodeId bob{static_cast<std::size_t>(nx * ny - 1)};
    return Topology(std::move(positions), willie_position, NodeId{0}, bob, model);
}

}  // namespace covert
