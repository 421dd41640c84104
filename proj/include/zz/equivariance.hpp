#pragma once

#include "zz/bases.hpp"
#include "zz/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace zz {

struct EquivarianceReport {
    std::string map_name;
    SpaceTag tag;
    Group checked_group = Group::Stab0;
    std::size_t m = 0;
    std::size_t permutations = 0;
    std::size_t trials = 0;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;

    /// One JSON object on a single line.
    std::string to_json() const;
};

/// Random tensor of the given order with entries uniform in [-1,1]^2.
Tensor random_tensor(std::size_t order, std::size_t m, Rng& rng);

/// Checks map(sigma* T) == sigma* map(T) for every sigma in Stab(0) (resp. S_m)
/// on `trials` random inputs of order tag.k.
EquivarianceReport check_equivariance(const BasisMap& map, Group group, std::size_t m, std::size_t trials,
                                      std::uint64_t seed, double tolerance = 1e-12);

/// Numerical rank of the maps in `maps` as vectors in the space of linear
/// maps, estimated from their outputs on `samples` random inputs. Uses
/// Gaussian elimination with full pivoting; `rel_tol` is relative to the
/// largest pivot.
std::size_t numerical_rank(const std::vector<BasisMap>& maps, std::size_t m, std::size_t samples, std::uint64_t seed,
                           double rel_tol = 1e-9);

/// Rank of a dense row-major complex matrix by full-pivot elimination.
std::size_t matrix_rank(std::vector<Complex> a, std::size_t rows, std::size_t cols, double rel_tol);

}  // namespace zz
