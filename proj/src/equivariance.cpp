#include "zz/equivariance.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace zz {

std::string EquivarianceReport::to_json() const
{
    nlohmann::json j = {
        {"map", map_name},
        {"space", tag.to_string()},
        {"group", group_name(checked_group)},
        {"m", m},
        {"permutations", permutations},
        {"trials", trials},
        {"max_deviation", max_deviation},
        {"tolerance", tolerance},
        {"pass", passed},
    };
    return j.dump();
}

Tensor random_tensor(std::size_t order, std::size_t m, Rng& rng)
{
    Tensor t(order, m);
    for (auto& v : t.data())
        v = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    return t;
}

EquivarianceReport check_equivariance(const BasisMap& map, Group group, std::size_t m, std::size_t trials,
                                      std::uint64_t seed, double tolerance)
{
    const auto perms = group == Group::Stab0 ? enumerate_stab0(m) : enumerate_sm(m);
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const Tensor input = random_tensor(static_cast<std::size_t>(map.tag.k), m, rng);
        const Tensor base = map.apply(input);
        for (const auto& sigma : perms) {
            const Tensor lhs = map.apply(permute_tensor(input, sigma));
            const Tensor rhs = permute_tensor(base, sigma);
            worst = std::max(worst, max_abs(lhs - rhs));
        }
    }
    EquivarianceReport r;
    r.map_name = map.name;
    r.tag = map.tag;
    r.checked_group = group;
    r.m = m;
    r.permutations = perms.size();
    r.trials = trials;
    r.max_deviation = worst;
    r.tolerance = tolerance;
    r.passed = std::isfinite(worst) && worst <= tolerance;
    return r;
}

std::size_t matrix_rank(std::vector<Complex> a, std::size_t rows, std::size_t cols, double rel_tol)
{
    if (a.size() != rows * cols)
        throw std::invalid_argument("matrix_rank: size mismatch");
    std::vector<std::size_t> col_order(cols);
    for (std::size_t c = 0; c < cols; ++c)
        col_order[c] = c;
    auto at = [&](std::size_t r, std::size_t c) -> Complex& { return a[r * cols + col_order[c]]; };

    double first_pivot = 0.0;
    std::size_t rank = 0;
    for (; rank < std::min(rows, cols); ++rank) {
        std::size_t pr = rank, pc = rank;
        double best = -1.0;
        for (std::size_t r = rank; r < rows; ++r)
            for (std::size_t c = rank; c < cols; ++c)
                if (const double v = std::abs(at(r, c)); v > best) {
                    best = v;
                    pr = r;
                    pc = c;
                }
        if (rank == 0)
            first_pivot = best;
        if (best <= rel_tol * first_pivot || best == 0.0)
            break;
        if (pr != rank)
            for (std::size_t c = 0; c < cols; ++c)
                std::swap(a[pr * cols + c], a[rank * cols + c]);
        std::swap(col_order[pc], col_order[rank]);
        const Complex pivot = at(rank, rank);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const Complex f = at(r, rank) / pivot;
            if (f == Complex{})
                continue;
            for (std::size_t c = rank; c < cols; ++c)
                at(r, c) -= f * at(rank, c);
        }
    }
    return rank;
}

std::size_t numerical_rank(const std::vector<BasisMap>& maps, std::size_t m, std::size_t samples, std::uint64_t seed,
                           double rel_tol)
{
    if (maps.empty())
        return 0;
    Rng rng(seed);
    const auto k = static_cast<std::size_t>(maps.front().tag.k);
    std::vector<Tensor> inputs;
    for (std::size_t s = 0; s < samples; ++s)
        inputs.push_back(random_tensor(k, m, rng));

    std::vector<Complex> rows;
    std::size_t cols = 0;
    for (const auto& b : maps) {
        std::vector<Complex> row;
        for (const auto& in : inputs) {
            const Tensor out = b.apply(in);
            row.insert(row.end(), out.data().begin(), out.data().end());
        }
        if (cols == 0)
            cols = row.size();
        else if (row.size() != cols)
            throw std::invalid_argument("numerical_rank: maps have different output shapes");
        rows.insert(rows.end(), row.begin(), row.end());
    }
    return matrix_rank(std::move(rows), maps.size(), cols, rel_tol);
}

}  // namespace zz
