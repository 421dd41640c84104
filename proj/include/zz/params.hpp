#pragma once

#include "zz/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zz {

enum class ParamRole { Coeff, Bias, ComplexCoeff, Eta };

const char* role_name(ParamRole r);

/// A contiguous run of reals owned by one layer.
struct ParamBlock {
    std::string name;
    ParamRole role = ParamRole::Coeff;
    std::size_t offset = 0;
    std::size_t size = 0;
    /// Half-width of the uniform initialization interval; 0 for biases.
    double init_scale = 0.0;
};

/// Flat real parameter vector with a registry of named blocks. Blocks are
/// appended in construction order and never overlap.
class ParamStore {
public:
    std::size_t add(std::string name, ParamRole role, std::size_t size, double init_scale = 0.0);

    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    const std::vector<ParamBlock>& registry() const { return registry_; }
    const ParamBlock& block(const std::string& name) const;

    /// Coefficients uniform in [-s, s], biases 0, thresholds `eta_init`.
    void initialize(std::uint64_t seed, double eta_init);
    /// Projects every threshold onto eta >= 0.
    void clamp_eta();
    /// One flag per real: true for thresholds.
    const std::vector<bool>& eta_mask() const { return eta_mask_; }

    ParamBinding binding(double* grads = nullptr) const { return ParamBinding{values_.data(), grads}; }

private:
    std::vector<double> values_;
    std::vector<ParamBlock> registry_;
    std::vector<bool> eta_mask_;
};

}  // namespace zz
