#pragma once

#include "zz/layers.hpp"
#include "zz/params.hpp"
#include "zz/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace zz {

enum class WeightVariant { NS, NSPlus };
enum class VectorVariant { NC, NCPlus };

struct WeightUnitConfig {
    WeightVariant variant = WeightVariant::NSPlus;
    std::vector<std::size_t> early_channels;
    std::vector<std::size_t> late_channels;
    bool two_cloud = true;
};

struct VectorUnitConfig {
    VectorVariant variant = VectorVariant::NCPlus;
    std::vector<std::size_t> channels;
};

struct ZZUnitConfig {
    WeightUnitConfig weight;
    VectorUnitConfig vector;
    bool normalize_weights = true;
};

struct ModelConfig {
    std::vector<ZZUnitConfig> units;
    bool shared_pair_weights = true;
    Pooling pooling = Pooling::Mean;
    double leaky_slope = 0.01;
    double eta_init = 0.1;

    /// Throws std::invalid_argument describing the first inconsistency.
    void validate() const;
    /// Canonical one-key-per-line text; parse(to_text()) round-trips.
    std::string to_text() const;
    static ModelConfig parse(const std::string& text);
};

/// One ZZ-unit: early (4,4), late (4,16,4,1), vector (32,1).
ModelConfig make_broad_model();
/// Three ZZ-units: early (4); late (4,8,4), (4,8,4), (4,8,1); vector (4), (4), (1).
ModelConfig make_deep_model();
/// Single-cloud NR(m) network: NS weight unit and NC vector unit.
ModelConfig make_nr_model(std::vector<std::size_t> early, std::vector<std::size_t> late,
                          std::vector<std::size_t> vector);
/// Single-cloud NR+(m) network with the same channel plumbing.
ModelConfig make_nr_plus_model(std::vector<std::size_t> early, std::vector<std::size_t> late,
                               std::vector<std::size_t> vector, bool normalize);

struct WeightUnitLayers {
    std::vector<LinearLayer> early;
    std::vector<LinearLayer> late;
};

struct VectorUnitLayers {
    std::vector<LinearLayer> layers;
    /// Offsets of the per-channel thresholds after every layer but the last.
    std::vector<std::size_t> eta_offsets;
};

struct UnitLayers {
    WeightUnitLayers weight;
    VectorUnitLayers vector;
};

/// Parameter layout of a configuration plus its values.
class Model {
public:
    explicit Model(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    /// Layers of unit `u` for the Z side (`x_side` selects the X-side copy
    /// when pair weights are not shared).
    const UnitLayers& unit(std::size_t u, bool x_side = false) const;
    /// Channels of the clouds entering unit `u`.
    std::size_t input_channels(std::size_t u) const;

    void initialize(std::uint64_t seed) { params_.initialize(seed, config_.eta_init); }

private:
    ModelConfig config_;
    ParamStore params_;
    std::vector<UnitLayers> z_units_;
    std::vector<UnitLayers> x_units_;
};

// ---------------------------------------------------------------------------
// Recorded forward passes.

namespace graph {

/// NS weight unit alpha(Z) on a single-channel cloud node; returns a 1x1 node.
Var weight_unit_ns(Tape& t, const Model& model, const UnitLayers& u, Var cloud, const ParamBinding& p);
/// NS+ weight unit; `other` may be a null pointer for single-cloud units.
Var weight_unit_ns_plus(Tape& t, const Model& model, const ZZUnitConfig& cfg, const UnitLayers& u, Var cloud,
                        const Var* other, const ParamBinding& p);
/// NC / NC+ vector unit.
Var vector_unit(Tape& t, const Model& model, const ZZUnitConfig& cfg, const UnitLayers& u, Var cloud,
                const ParamBinding& p);
Var nr_forward(Tape& t, const Model& model, Var cloud, const ParamBinding& p);
Var nr_plus_forward(Tape& t, const Model& model, Var cloud, const ParamBinding& p);
/// One ZZ-unit step on a pair of cloud nodes.
std::pair<Var, Var> zz_unit_step(Tape& t, const Model& model, std::size_t unit, Var z, Var x,
                                 const ParamBinding& p);
/// Chained units read out by summation: (F_zx, F_xz).
std::pair<Var, Var> zz_net_forward(Tape& t, const Model& model, Var z, Var x, const ParamBinding& p);
Var rotation_head(Tape& t, const Model& model, Var z, Var x, const ParamBinding& p);

}  // namespace graph

// ---------------------------------------------------------------------------
// Value-level forward passes with the model's current parameters.

MultiVector as_multivector(const PointCloud& cloud);

Complex weight_unit_ns(const PointCloud& z, const Model& model);
MultiVector weight_unit_ns_plus(const PointCloud& z, const PointCloud* x, const Model& model, std::size_t unit = 0);
MultiVector vector_unit(const PointCloud& z, const Model& model, std::size_t unit = 0);
Complex nr_forward(const PointCloud& z, const Model& model);
Complex nr_plus_forward(const PointCloud& z, const Model& model);
/// Returns the next pair of multivectors (one channel per unit output channel).
std::pair<MultiVector, MultiVector> zz_unit_step(const MultiVector& z, const MultiVector& x, const Model& model,
                                                 std::size_t unit);
std::pair<Complex, Complex> zz_net_forward(const CloudPair& pair, const Model& model);
Complex rotation_head(const CloudPair& pair, const Model& model);

}  // namespace zz
