#pragma once

#include "zz/bases.hpp"
#include "zz/networks.hpp"
#include "zz/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace zz {

struct CheckResult {
    std::string suite;
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;

    std::string to_json() const;
};

struct VerifyOptions {
    std::uint64_t seed = 7;
    /// Adds a deliberately broken map (T -> T e1) to the basis checks.
    bool inject_broken_basis = false;
};

/// bases, layers, models, grad, theorem
std::vector<std::string> suite_names();
/// Runs one suite ("all" runs every suite).
std::vector<CheckResult> run_suite(const std::string& name, const VerifyOptions& opt = {});

// ---------------------------------------------------------------------------
// Oracles shared with the tests.

/// Dimension of the space of complex-linear maps on (C^m)^{⊗2} commuting with
/// every permutation, from the null space of P A - A P = 0 for the
/// generators (0 1) and (0 1 ... m-1).
std::size_t sm_fixed_point_nullity(std::size_t m);
/// Largest residual |P A - A P| of the catalog maps of S_m L(2,2) under the
/// same generators.
double sm_catalog_fixed_point_residual(std::size_t m);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::string worst;
};

/// Real loss of a coordinate vector. When `grads` is non-null it receives
/// the analytic gradient; when `pattern` is non-null it receives the kink
/// pattern hash of the evaluation.
using LossFn = std::function<double(std::span<const double> x, double* grads, std::uint64_t* pattern)>;

/// Central differences with step h on every coordinate of `x`; relative
/// error |a - n| / max(|a|, |n|, floor). Coordinates whose perturbed
/// evaluations change the kink pattern are counted in `skipped`.
GradCheckReport finite_difference_check(const LossFn& f, std::span<const double> x, double h = 1e-5,
                                        double floor = 1e-6);

/// Builds a graph from leaf inputs and parameters; used to check one op.
using GraphFn = std::function<Var(Tape& t, std::span<const Var> inputs, const ParamBinding& p)>;

struct GraphCase {
    std::vector<Features> inputs;
    std::vector<double> params;
};

/// Draws inputs and parameters for a graph check.
using CaseFn = std::function<GraphCase(Rng& rng)>;

/// Gradient check of L = Re sum conj(w) out with random w, over parameters and
/// input entries. Coordinates whose central difference straddles an
/// activation kink are excluded; the case is redrawn if more than 5% are.
GradCheckReport check_graph_gradient(const GraphFn& g, const CaseFn& make, std::uint64_t seed);

/// Gradient check of the full rotation loss of a model at cloud size m.
GradCheckReport check_model_gradient(const ModelConfig& cfg, std::size_t m, std::uint64_t seed);

/// Random cloud with entries uniform in [-1,1]^2.
PointCloud random_cloud(std::size_t m, Rng& rng);
/// Random permutation of [m].
Permutation random_permutation(std::size_t m, Rng& rng);

/// NR+ model computing the same function as an NR model (no normalization,
/// same pooling). Layers map through the Xi isomorphism.
Model embed_nr_in_nr_plus(const Model& nr);

/// gamma(Z) = sum over Stab(0) of Z^{sigma* a} conj(Z)^{sigma* b}, |a| = |b|.
Complex invariant_polynomial(const PointCloud& z, std::span<const int> a, std::span<const int> b);
/// f(Z) = sum_i gamma(tau_i* Z) z_i.
Complex theorem_form(const PointCloud& z, std::span<const int> a, std::span<const int> b);

}  // namespace zz
