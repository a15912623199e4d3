#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covert {

struct NodeId {
    std::size_t index = 0;
    auto operator<=>(const NodeId&) const = default;
};

using Vec3 = std::array<double, 3>;

double distance(const Vec3& a, const Vec3& b);

/// Log-distance path loss: gain(d) = reference_gain * (d / d0)^-exponent.
struct PathLossModel {
    double reference_gain_db = 0.0;
    double reference_distance_m = 1.0;
    double exponent = 3.0;
    double carrier_frequency_hz = 900e6;

    /// Free-space gain (lambda / 4 pi d0)^2 at the reference distance.
    static PathLossModel with_free_space_reference(double carrier_frequency_hz,
                                                   double exponent = 3.0,
                                                   double reference_distance_m = 1.0);

    void validate() const;
    double gain(double distance_m) const;
};

/// Directional power gains |h|^2 in dB: node_db[tx * n + rx] and willie_db[tx].
/// Diagonal entries of node_db carry no meaning.
struct GainTable {
    std::size_t node_count = 0;
    std::vector<double> node_db;
    std::vector<double> willie_db;
};

/// Gain-matrix CSV. Header `node_0,...,node_{N-1},willie`; row i holds the dB
/// gains from transmitter i. Throws ConfigError naming the offending row/cell.
GainTable read_gain_csv(std::istream& in);
GainTable read_gain_csv(const std::string& path);
void write_gain_csv(std::ostream& out, const GainTable& table);
void write_gain_csv(const std::string& path, const GainTable& table);

enum class GainSource { model, imported };

/// Receiving end of a link: another node or the adversary.
struct Endpoint {
    std::optional<NodeId> node;  // empty means Willie

    static Endpoint to(NodeId id) { return Endpoint{id}; }
    static Endpoint willie() { return Endpoint{}; }
    bool is_willie() const { return !node.has_value(); }
};

class Topology {
public:
    Topology(std::vector<Vec3> positions, Vec3 willie_position, NodeId alice, NodeId bob,
             PathLossModel model = PathLossModel::with_free_space_reference(900e6));

    std::size_t node_count() const { return positions_.size(); }
    const Vec3& position(NodeId id) const;
    const Vec3& willie_position() const { return willie_; }
    NodeId alice() const { return alice_; }
    NodeId bob() const { return bob_; }
    GainSource gain_source() const { return imported_ ? GainSource::imported : GainSource::model; }
    const PathLossModel& path_loss() const { return model_; }

    /// Linear power gain from tx to a node or to Willie.
    double link_gain(NodeId tx, Endpoint rx) const;

    /// Copy of this topology whose gains come from `table` instead of the model.
    Topology with_imported_gains(GainTable table) const;
    Topology with_imported_gains(const std::string& csv_path) const;

    /// Current gains in dB, whichever source backs them.
    GainTable gain_table() const;

    /// Optional range limit for candidate links; unset admits every pair.
    Topology with_max_link_distance(std::optional<double> meters) const;
    std::optional<double> max_link_distance() const { return max_link_distance_; }
    bool link_allowed(NodeId tx, NodeId rx) const;

private:
    void check_node(NodeId id) const;

    std::vector<Vec3> positions_;
    Vec3 willie_;
    NodeId alice_;
    NodeId bob_;
    PathLossModel model_;
    std::optional<GainTable> imported_;
    std::optional<double> max_link_distance_;
};

/// Regular nx-by-ny grid at height 0; node (i, j) has index i + nx * j and sits
/// at (i * spacing, j * spacing, 0). Alice is (0, 0), Bob the opposite corner.
Topology grid_topology(int nx, int ny, double spacing_m, Vec3 willie_position,
                       PathLossModel model = PathLossModel::with_free_space_reference(900e6));

}  // namespace covert
