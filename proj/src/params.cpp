#include "zz/params.hpp"

#include "zz/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace zz {

const char* role_name(ParamRole r)
{
    switch (r) {
    case ParamRole::Coeff: return "coeff";
    case ParamRole::Bias: return "bias";
    case ParamRole::ComplexCoeff: return "complex";
    case ParamRole::Eta: return "eta";
    }
    return "?";
}

std::size_t ParamStore::add(std::string name, ParamRole role, std::size_t size, double init_scale)
{
    for (const auto& b : registry_)
        if (b.name == name)
            throw std::invalid_argument("duplicate parameter block '" + name + "'");
    const std::size_t offset = values_.size();
    registry_.push_back(ParamBlock{std::move(name), role, offset, size, init_scale});
    values_.resize(offset + size, 0.0);
    eta_mask_.resize(offset + size, role == ParamRole::Eta);
    return offset;
}

const ParamBlock& ParamStore::block(const std::string& name) const
{
    for (const auto& b : registry_)
        if (b.name == name)
            return b;
    throw std::out_of_range("no parameter block '" + name + "'");
}

void ParamStore::initialize(std::uint64_t seed, double eta_init)
{
    for (std::size_t n = 0; n < registry_.size(); ++n) {
        const auto& b = registry_[n];
        Rng rng(seed, n);
        for (std::size_t k = 0; k < b.size; ++k) {
            double& v = values_[b.offset + k];
            switch (b.role) {
            case ParamRole::Bias: v = 0.0; break;
            case ParamRole::Eta: v = eta_init; break;
            default: v = rng.uniform(-b.init_scale, b.init_scale); break;
            }
        }
    }
}

void ParamStore::clamp_eta()
{
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (eta_mask_[k])
            values_[k] = std::max(values_[k], 0.0);
}

}  // namespace zz
