#pragma once

#include "zz/cloud.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace zz {

enum class Group { Stab0, Sm };

const char* group_name(Group g);

/// Space of linear maps (C^m)^{⊗k} -> (C^m)^{⊗l} equivariant under `group`.
struct SpaceTag {
    Group group = Group::Stab0;
    int k = 0;
    int l = 0;

    std::string to_string() const;
};

/// One closed-form element of a spanning set.
struct BasisMap {
    SpaceTag tag;
    std::size_t index = 0;
    std::string name;
    std::function<Tensor(const Tensor&)> apply;
};

/// Stab(0)-equivariant spanning sets for 0 <= k,l <= 2, in catalog order.
/// Sizes: (0,0) 1, (1,0) 2, (0,1) 2, (2,0) 5, (1,1) 5, (0,2) 5, (2,1) 15, (1,2) 15, (2,2) 52.
std::vector<BasisMap> catalog_stab0(int k, int l, std::size_t m);

/// S_m-equivariant bases for (k,l) in {(1,1), (0,1), (2,1), (0,2), (2,2)}.
std::vector<BasisMap> catalog_sm(int k, int l, std::size_t m);

/// The fifteen L0(2,1) maps applied to Z ⊗ conj(Z), evaluated from Z in O(m)
/// without forming the tensor.
std::array<std::vector<Complex>, 15> fused_first_layer(const PointCloud& cloud);

/// T -> sum_i e_i ⊗ tau_i*( L0(tau_i* T) ). Maps L0(k,l) into L(k,l+1).
BasisMap xi_isomorphism(const BasisMap& l0, std::size_t m);

/// Canonical text listing every catalog used by network layers, in order.
/// Its hash pins the parameter layout inside checkpoints.
std::string catalog_signature();

/// Number of summed indices in each S_m L(2,2) basis map; layers divide by
/// m per summed index when mean pooling is enabled.
extern const std::array<int, 15> kSmTensorSummedIndices;
/// Number of summed indices in each Stab(0) L0(2,1) basis map.
extern const std::array<int, 15> kStab0FirstSummedIndices;
/// Number of summed indices in each Stab(0) L0(1,1) basis map.
extern const std::array<int, 5> kStab0VectorSummedIndices;

}  // namespace zz
