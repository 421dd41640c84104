#include "zz/bases.hpp"

#include <sstream>
#include <stdexcept>
#include <utility>

namespace zz {

const std::array<int, 15> kSmTensorSummedIndices = {0, 0, 0, 1, 1, 1, 1, 0, 0, 1, 1, 2, 2, 1, 1};
const std::array<int, 15> kStab0FirstSummedIndices = {2, 1, 0, 1, 1, 2, 1, 0, 1, 1, 0, 0, 1, 1, 0};
const std::array<int, 5> kStab0VectorSummedIndices = {1, 0, 0, 1, 0};

const char* group_name(Group g) { return g == Group::Stab0 ? "Stab0" : "Sm"; }

std::string SpaceTag::to_string() const
{
    std::ostringstream os;
    os << group_name(group) << "(" << k << "," << l << ")";
    return os.str();
}

namespace {

using Map = std::function<Tensor(const Tensor&)>;

void require_order(const Tensor& t, std::size_t order, std::size_t m)
{
    if (t.order() != order || (order > 0 && t.side() != m))
        throw std::invalid_argument("basis map input has wrong shape");
}

Tensor vec(std::size_t m, Complex fill = {})
{
    Tensor t(1, m);
    for (auto& v : t.data())
        v = fill;
    return t;
}

Tensor e0(std::size_t m)
{
    Tensor t(1, m);
    t(0) = 1.0;
    return t;
}

Tensor scalar(Complex s)
{
    Tensor t(0, 0);
    t() = s;
    return t;
}

Complex total(const Tensor& t)
{
    Complex s{};
    for (const auto& v : t.data())
        s += v;
    return s;
}

Complex trace(const Tensor& t)
{
    Complex s{};
    for (std::size_t i = 0; i < t.side(); ++i)
        s += t(i, i);
    return s;
}

Tensor row_sums(const Tensor& t)  // T 1
{
    Tensor out(1, t.side());
    for (std::size_t i = 0; i < t.side(); ++i)
        for (std::size_t j = 0; j < t.side(); ++j)
            out(i) += t(i, j);
    return out;
}

Tensor col_sums(const Tensor& t)  // T^T 1
{
    Tensor out(1, t.side());
    for (std::size_t i = 0; i < t.side(); ++i)
        for (std::size_t j = 0; j < t.side(); ++j)
            out(j) += t(i, j);
    return out;
}

Tensor diag(const Tensor& t)
{
    Tensor out(1, t.side());
    for (std::size_t i = 0; i < t.side(); ++i)
        out(i) = t(i, i);
    return out;
}

Tensor diag_star(const Tensor& v)
{
    Tensor out(2, v.side());
    for (std::size_t i = 0; i < v.side(); ++i)
        out(i, i) = v(i);
    return out;
}

Tensor outer(const Tensor& a, const Tensor& b)
{
    Tensor out(2, a.side());
    for (std::size_t i = 0; i < a.side(); ++i)
        for (std::size_t j = 0; j < a.side(); ++j)
            out(i, j) = a(i) * b(j);
    return out;
}

Tensor transpose(const Tensor& t)
{
    Tensor out(2, t.side());
    for (std::size_t i = 0; i < t.side(); ++i)
        for (std::size_t j = 0; j < t.side(); ++j)
            out(i, j) = t(j, i);
    return out;
}

Tensor times(Tensor t, Complex s)
{
    t *= s;
    return t;
}

/// Row-broadcast: out_ij = v_i.
Tensor broadcast_rows(const Tensor& v) { return outer(v, vec(v.side(), 1.0)); }
/// Column-broadcast: out_ij = v_j.
Tensor broadcast_cols(const Tensor& v) { return outer(vec(v.side(), 1.0), v); }

BasisMap make(Group g, int k, int l, std::size_t index, std::string name, Map f)
{
    return BasisMap{SpaceTag{g, k, l}, index, std::move(name), std::move(f)};
}

// L0(2,0): lambda_0..4
std::vector<Map> lambda_maps(std::size_t m)
{
    return {
        [m](const Tensor& t) { require_order(t, 2, m); return scalar(total(t)); },
        [m](const Tensor& t) { require_order(t, 2, m); return scalar(trace(t)); },
        [m](const Tensor& t) { require_order(t, 2, m); return scalar(t(0, 0)); },
        [m](const Tensor& t) { require_order(t, 2, m); return scalar(row_sums(t)(0)); },
        [m](const Tensor& t) { require_order(t, 2, m); return scalar(col_sums(t)(0)); },
    };
}

// L0(0,2): T_0..4 as constant tensors
std::vector<Tensor> t_constants(std::size_t m)
{
    const Tensor one = vec(m, 1.0);
    const Tensor e = e0(m);
    return {outer(one, one), diag_star(one), outer(e, e), outer(e, one), outer(one, e)};
}

// L0(2,1): K_0..14
std::vector<Map> k_maps(std::size_t m)
{
    std::vector<Map> out;
    const auto lambdas = lambda_maps(m);
    for (std::size_t i = 0; i < 5; ++i)
        out.push_back([m, f = lambdas[i]](const Tensor& t) { return times(e0(m), f(t)()); });
    for (std::size_t i = 0; i < 5; ++i)
        out.push_back([m, f = lambdas[i]](const Tensor& t) { return vec(m, f(t)()); });
    out.push_back([m](const Tensor& t) {  // T e0
        require_order(t, 2, m);
        Tensor v(1, m);
        for (std::size_t i = 0; i < m; ++i)
            v(i) = t(i, 0);
        return v;
    });
    out.push_back([m](const Tensor& t) {  // T^T e0
        require_order(t, 2, m);
        Tensor v(1, m);
        for (std::size_t i = 0; i < m; ++i)
            v(i) = t(0, i);
        return v;
    });
    out.push_back([m](const Tensor& t) { require_order(t, 2, m); return row_sums(t); });
    out.push_back([m](const Tensor& t) { require_order(t, 2, m); return col_sums(t); });
    out.push_back([m](const Tensor& t) { require_order(t, 2, m); return diag(t); });
    return out;
}

// L0(1,2): L_0..14
std::vector<Map> l12_maps(std::size_t m)
{
    std::vector<Map> out;
    const auto ts = t_constants(m);
    for (std::size_t i = 0; i < 5; ++i)
        out.push_back([m, c = ts[i]](const Tensor& v) { require_order(v, 1, m); return times(c, v(0)); });
    for (std::size_t i = 0; i < 5; ++i)
        out.push_back([m, c = ts[i]](const Tensor& v) {
            require_order(v, 1, m);
            return times(c, total(v));
        });
    out.push_back([m](const Tensor& v) { require_order(v, 1, m); return outer(e0(m), v); });
    out.push_back([m](const Tensor& v) { require_order(v, 1, m); return outer(v, e0(m)); });
    out.push_back([m](const Tensor& v) { require_order(v, 1, m); return broadcast_cols(v); });
    out.push_back([m](const Tensor& v) { require_order(v, 1, m); return broadcast_rows(v); });
    out.push_back([m](const Tensor& v) { require_order(v, 1, m); return diag_star(v); });
    return out;
}

std::vector<BasisMap> named(Group g, int k, int l, const std::string& prefix, std::vector<Map> maps)
{
    std::vector<BasisMap> out;
    for (std::size_t i = 0; i < maps.size(); ++i)
        out.push_back(make(g, k, l, i, prefix + "_" + std::to_string(i), std::move(maps[i])));
    return out;
}

}  // namespace

std::vector<BasisMap> catalog_stab0(int k, int l, std::size_t m)
{
    if (m < 2)
        throw std::invalid_argument("Stab(0) catalogs require m >= 2");
    const auto key = std::pair{k, l};
    const Group g = Group::Stab0;

    if (key == std::pair{0, 0})
        return named(g, 0, 0, "id", {[](const Tensor& t) { return scalar(t()); }});

    if (key == std::pair{1, 0})
        return named(g, 1, 0, "mu",
                     {[m](const Tensor& v) { require_order(v, 1, m); return scalar(v(0)); },
                      [m](const Tensor& v) { require_order(v, 1, m); return scalar(total(v)); }});

    if (key == std::pair{0, 1})
        return named(g, 0, 1, "w",
                     {[m](const Tensor& s) { return times(e0(m), s()); },
                      [m](const Tensor& s) { return vec(m, s()); }});

    if (key == std::pair{2, 0})
        return named(g, 2, 0, "lambda", lambda_maps(m));

    if (key == std::pair{1, 1}) {
        std::vector<Map> maps = {
            [m](const Tensor& v) { require_order(v, 1, m); return vec(m, total(v)); },
            [m](const Tensor& v) { require_order(v, 1, m); return v; },
            [m](const Tensor& v) { require_order(v, 1, m); return times(e0(m), v(0)); },
            [m](const Tensor& v) { require_order(v, 1, m); return times(e0(m), total(v)); },
            [m](const Tensor& v) { require_order(v, 1, m); return vec(m, v(0)); },
        };
        return named(g, 1, 1, "L", std::move(maps));
    }

    if (key == std::pair{0, 2}) {
        std::vector<Map> maps;
        for (const auto& c : t_constants(m))
            maps.push_back([c](const Tensor& s) { return times(c, s()); });
        return named(g, 0, 2, "T", std::move(maps));
    }

    if (key == std::pair{2, 1})
        return named(g, 2, 1, "K", k_maps(m));

    if (key == std::pair{1, 2})
        return named(g, 1, 2, "L", l12_maps(m));

    if (key == std::pair{2, 2}) {
        std::vector<Map> maps;
        const auto lambdas = lambda_maps(m);
        const auto ts = t_constants(m);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                maps.push_back([f = lambdas[j], c = ts[i]](const Tensor& t) { return times(c, f(t)()); });
        const auto ks = k_maps(m);
        const auto ls = l12_maps(m);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                maps.push_back([outer_map = ls[10 + i], inner = ks[10 + j]](const Tensor& t) {
                    return outer_map(inner(t));
                });
        maps.push_back([m](const Tensor& t) { require_order(t, 2, m); return t; });
        maps.push_back([m](const Tensor& t) { require_order(t, 2, m); return transpose(t); });
        return named(g, 2, 2, "KK", std::move(maps));
    }

    throw std::invalid_argument("no Stab(0) catalog for (k,l) = (" + std::to_string(k) + "," + std::to_string(l) +
                                ")");
}

std::vector<BasisMap> catalog_sm(int k, int l, std::size_t m)
{
    if (m < 1)
        throw std::invalid_argument("S_m catalogs require m >= 1");
    const auto key = std::pair{k, l};
    const Group g = Group::Sm;

    if (key == std::pair{1, 1})
        return named(g, 1, 1, "P",
                     {[m](const Tensor& v) { require_order(v, 1, m); return v; },
                      [m](const Tensor& v) { require_order(v, 1, m); return vec(m, total(v)); }});

    if (key == std::pair{0, 1})
        return named(g, 0, 1, "P", {[m](const Tensor& s) { return vec(m, s()); }});

    if (key == std::pair{2, 1})
        return named(g, 2, 1, "P",
                     {[m](const Tensor& t) { require_order(t, 2, m); return row_sums(t); },
                      [m](const Tensor& t) { require_order(t, 2, m); return col_sums(t); },
                      [m](const Tensor& t) { require_order(t, 2, m); return diag(t); },
                      [m](const Tensor& t) { require_order(t, 2, m); return vec(m, total(t)); },
                      [m](const Tensor& t) { require_order(t, 2, m); return vec(m, trace(t)); }});

    if (key == std::pair{0, 2}) {
        const Tensor one = vec(m, 1.0);
        return named(g, 0, 2, "P",
                     {[c = outer(one, one)](const Tensor& s) { return times(c, s()); },
                      [c = diag_star(one)](const Tensor& s) { return times(c, s()); }});
    }

    if (key == std::pair{2, 2}) {
        auto req = [m](const Tensor& t) { require_order(t, 2, m); };
        std::vector<Map> maps = {
            [req](const Tensor& t) { req(t); return t; },
            [req](const Tensor& t) { req(t); return transpose(t); },
            [req](const Tensor& t) { req(t); return diag_star(diag(t)); },
            [req](const Tensor& t) { req(t); return broadcast_rows(row_sums(t)); },
            [req](const Tensor& t) { req(t); return broadcast_cols(row_sums(t)); },
            [req](const Tensor& t) { req(t); return broadcast_rows(col_sums(t)); },
            [req](const Tensor& t) { req(t); return broadcast_cols(col_sums(t)); },
            [req](const Tensor& t) { req(t); return broadcast_rows(diag(t)); },
            [req](const Tensor& t) { req(t); return broadcast_cols(diag(t)); },
            [req](const Tensor& t) { req(t); return diag_star(row_sums(t)); },
            [req](const Tensor& t) { req(t); return diag_star(col_sums(t)); },
            [req, m](const Tensor& t) { req(t); return times(outer(vec(m, 1.0), vec(m, 1.0)), total(t)); },
            [req, m](const Tensor& t) { req(t); return diag_star(vec(m, total(t))); },
            [req, m](const Tensor& t) { req(t); return times(outer(vec(m, 1.0), vec(m, 1.0)), trace(t)); },
            [req, m](const Tensor& t) { req(t); return diag_star(vec(m, trace(t))); },
        };
        return named(g, 2, 2, "P", std::move(maps));
    }

    throw std::invalid_argument("no S_m catalog for (k,l) = (" + std::to_string(k) + "," + std::to_string(l) + ")");
}

std::array<std::vector<Complex>, 15> fused_first_layer(const PointCloud& cloud)
{
    const std::size_t m = cloud.size();
    const auto z = cloud.points();
    Complex s{};
    double q = 0.0;
    for (const auto& p : z) {
        s += p;
        q += std::norm(p);
    }
    const Complex z0 = z[0];
    const std::array<Complex, 5> lambda = {
        std::norm(s), q, std::norm(z0), z0 * std::conj(s), std::conj(z0) * s,
    };

    std::array<std::vector<Complex>, 15> out;
    for (auto& v : out)
        v.assign(m, Complex{});
    for (std::size_t i = 0; i < 5; ++i) {
        out[i][0] = lambda[i];
        out[5 + i].assign(m, lambda[i]);
    }
    for (std::size_t j = 0; j < m; ++j) {
        out[10][j] = std::conj(z0) * z[j];
        out[11][j] = z0 * std::conj(z[j]);
        out[12][j] = std::conj(s) * z[j];
        out[13][j] = s * std::conj(z[j]);
        out[14][j] = std::norm(z[j]);
    }
    return out;
}

BasisMap xi_isomorphism(const BasisMap& l0, std::size_t m)
{
    if (l0.tag.group != Group::Stab0)
        throw std::invalid_argument("xi_isomorphism expects a Stab(0) basis map");
    if (l0.tag.l > 2)
        throw std::invalid_argument("xi_isomorphism output order must be at most 3");
    std::vector<Permutation> taus;
    for (std::size_t i = 0; i < m; ++i)
        taus.push_back(tau(i, m));

    auto apply = [inner = l0.apply, taus, m, l = l0.tag.l](const Tensor& t) {
        Tensor out(static_cast<std::size_t>(l + 1), m);
        const std::size_t block = out.numel() / m;
        for (std::size_t i = 0; i < m; ++i) {
            const Tensor part = permute_tensor(inner(permute_tensor(t, taus[i])), taus[i]);
            for (std::size_t k = 0; k < block; ++k)
                out.data()[i * block + k] = part.data()[k];
        }
        return out;
    };
    return BasisMap{SpaceTag{Group::Sm, l0.tag.k, l0.tag.l + 1}, l0.index, "Xi(" + l0.name + ")", std::move(apply)};
}

std::string catalog_signature()
{
    std::ostringstream os;
    const std::size_t m = 4;
    auto list = [&os](const std::vector<BasisMap>& maps) {
        for (const auto& b : maps)
            os << b.tag.to_string() << ':' << b.index << ':' << b.name << '\n';
    };
    list(catalog_stab0(2, 1, m));
    list(catalog_stab0(1, 1, m));
    list(catalog_stab0(0, 1, m));
    list(catalog_sm(2, 2, m));
    list(catalog_sm(0, 2, m));
    list(catalog_sm(1, 1, m));
    list(catalog_sm(0, 1, m));
    os << "pooling-summed-indices:";
    for (int s : kSmTensorSummedIndices)
        os << s;
    os << ';';
    for (int s : kStab0FirstSummedIndices)
        os << s;
    os << ';';
    for (int s : kStab0VectorSummedIndices)
        os << s;
    os << '\n';
    return os.str();
}

}  // namespace zz
