#include "zz/verify.hpp"

#include "zz/equivariance.hpp"
#include "zz/training.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace zz {

std::string CheckResult::to_json() const
{
    nlohmann::json j = {{"suite", suite},         {"name", name},   {"passed", passed},
                        {"value", value},         {"tolerance", tolerance}};
    if (!detail.empty())
        j["detail"] = detail;
    return j.dump();
}

std::vector<std::string> suite_names() { return {"bases", "layers", "models", "grad", "theorem"}; }

// ---------------------------------------------------------------------------

PointCloud random_cloud(std::size_t m, Rng& rng)
{
    std::vector<Complex> pts(m);
    for (auto& p : pts)
        p = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return PointCloud(std::move(pts));
}

Permutation random_permutation(std::size_t m, Rng& rng)
{
    std::vector<std::size_t> v(m);
    std::iota(v.begin(), v.end(), std::size_t{0});
    for (std::size_t k = m; k > 1; --k)
        std::swap(v[k - 1], v[rng.below(k)]);
    return Permutation(std::move(v));
}

namespace {

Complex random_complex(Rng& rng) { return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}; }

Features random_features(std::size_t channels, std::size_t length, Rng& rng)
{
    Features f(channels, length);
    for (auto& v : f.data)
        v = random_complex(rng);
    return f;
}

double max_diff(const Features& a, const Features& b)
{
    if (a.channels != b.channels || a.length != b.length)
        return INFINITY;
    double d = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k)
        d = std::max(d, std::abs(a.data[k] - b.data[k]));
    return d;
}

double max_abs(const Features& a)
{
    double d = 0.0;
    for (auto v : a.data)
        d = std::max(d, std::abs(v));
    return d;
}

Features scaled(Features f, Complex s)
{
    for (auto& v : f.data)
        v *= s;
    return f;
}

/// [pi* v]_i = v_{pi^-1(i)} per channel; length m or m*m.
Features permute_features(const Features& f, const Permutation& pi)
{
    const std::size_t m = pi.size();
    Features out(f.channels, f.length);
    const bool tensor = f.length == m * m && m > 1;
    for (std::size_t c = 0; c < f.channels; ++c) {
        if (tensor) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    out.at(c, pi(i) * m + pi(j)) = f.at(c, i * m + j);
        } else {
            for (std::size_t i = 0; i < m; ++i)
                out.at(c, pi(i)) = f.at(c, i);
        }
    }
    return out;
}

Tensor channel_tensor(const Features& f, std::size_t c, std::size_t order, std::size_t m)
{
    Tensor t(order, m);
    std::copy(f.channel(c).begin(), f.channel(c).end(), t.data().begin());
    return t;
}

double law_error(Complex got, Complex want) { return std::abs(got - want) / (1.0 + std::abs(want)); }

struct Collector {
    std::string suite;
    std::vector<CheckResult> results;

    void le(const std::string& name, double value, double tol, std::string detail = {})
    {
        results.push_back({suite, name, value <= tol, value, tol, std::move(detail)});
    }
    void ge(const std::string& name, double value, double bound, std::string detail = {})
    {
        results.push_back({suite, name, value >= bound, value, bound, std::move(detail)});
    }
    void eq(const std::string& name, double value, double want, std::string detail = {})
    {
        results.push_back({suite, name, value == want, value, want, std::move(detail)});
    }
    void flag(const std::string& name, bool ok, std::string detail = {})
    {
        results.push_back({suite, name, ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)});
    }
};

/// Random parameters: coefficients inside their initialization interval,
/// biases in [-0.2, 0.2], thresholds in [0, 0.2].
void randomize(Model& model, Rng& rng)
{
    auto values = model.params().values();
    for (const auto& b : model.params().registry())
        for (std::size_t k = b.offset; k < b.offset + b.size; ++k) {
            switch (b.role) {
            case ParamRole::Coeff:
            case ParamRole::ComplexCoeff: values[k] = rng.uniform(-b.init_scale, b.init_scale); break;
            case ParamRole::Bias: values[k] = rng.uniform(-0.2, 0.2); break;
            case ParamRole::Eta: values[k] = rng.uniform(0.0, 0.2); break;
            }
        }
}

LayerWeights random_layer(LayerKind kind, std::size_t in, std::size_t out, Rng& rng, bool with_bias = true)
{
    LayerWeights w = LayerWeights::zeros(kind, in, out);
    for (std::size_t k = 0; k < w.layer.coeff_reals(); ++k)
        w.params[k] = rng.uniform(-1.0, 1.0);
    if (with_bias)
        for (std::size_t k = w.layer.coeff_reals(); k < w.params.size(); ++k)
            w.params[k] = rng.uniform(-1.0, 1.0);
    return w;
}

// ---------------------------------------------------------------------------
// Explicit-catalog layer oracle.

double summed_scale(LayerKind kind, std::size_t k, Pooling pool, std::size_t m)
{
    if (pool == Pooling::Sum)
        return 1.0;
    int s = 0;
    switch (kind) {
    case LayerKind::Stab0First: s = kStab0FirstSummedIndices[k]; break;
    case LayerKind::Stab0Vector: s = kStab0VectorSummedIndices[k]; break;
    case LayerKind::SmTensor: s = kSmTensorSummedIndices[k]; break;
    case LayerKind::SmVector: s = static_cast<int>(k); break;
    default: s = 0;
    }
    return std::pow(static_cast<double>(m), -s);
}

/// Applies a layer by materializing each input channel's basis outputs with
/// the catalogs (Gram tensors formed explicitly for the first layer).
Features oracle_layer(const LayerWeights& w, const Features& in, Pooling pool)
{
    const auto& L = w.layer;
    const bool tensor_in = L.kind == LayerKind::SmTensor;
    const std::size_t m = tensor_in ? static_cast<std::size_t>(std::llround(std::sqrt(double(in.length))))
                                    : in.length;
    const std::size_t out_len = tensor_in ? m * m : in.length;

    std::vector<BasisMap> maps;
    std::size_t in_order = 1;
    switch (L.kind) {
    case LayerKind::Stab0First: maps = catalog_stab0(2, 1, m); in_order = 2; break;
    case LayerKind::Stab0Vector: maps = catalog_stab0(1, 1, m); break;
    case LayerKind::SmTensor: maps = catalog_sm(2, 2, m); in_order = 2; break;
    case LayerKind::SmVector: maps = catalog_sm(1, 1, m); break;
    default: break;
    }

    Features out(L.out, out_len);
    for (std::size_t i = 0; i < L.in; ++i) {
        std::vector<std::vector<Complex>> basis(L.basis_size());
        if (L.kind == LayerKind::Dense) {
            basis[0] = {in.channel(i).begin(), in.channel(i).end()};
        } else if (L.kind == LayerKind::ComplexPointwise || L.kind == LayerKind::ComplexSm) {
            basis[0] = {in.channel(i).begin(), in.channel(i).end()};
            if (L.kind == LayerKind::ComplexSm) {
                Complex mean{};
                for (auto v : in.channel(i))
                    mean += v;
                mean /= static_cast<double>(in.length);
                basis[1].assign(in.length, mean);
            }
        } else {
            Tensor x;
            if (L.kind == LayerKind::Stab0First) {
                x = gram(PointCloud(std::vector<Complex>(in.channel(i).begin(), in.channel(i).end())));
            } else {
                x = channel_tensor(in, i, in_order, m);
            }
            for (std::size_t k = 0; k < maps.size(); ++k) {
                const Tensor y = maps[k].apply(x);
                const double s = summed_scale(L.kind, k, pool, m);
                basis[k].resize(y.numel());
                for (std::size_t q = 0; q < y.numel(); ++q)
                    basis[k][q] = s * y.data()[q];
            }
        }
        for (std::size_t o = 0; o < L.out; ++o)
            for (std::size_t k = 0; k < L.basis_size(); ++k) {
                if (L.complex_linear()) {
                    const Complex c = w.complex_coeff(o, i, k).c;
                    for (std::size_t q = 0; q < out_len; ++q)
                        out.at(o, q) += c * basis[k][q];
                } else {
                    const RealLinearCoeff c = w.coeff(o, i, k);
                    for (std::size_t q = 0; q < out_len; ++q)
                        out.at(o, q) += c(basis[k][q]);
                }
            }
    }
    for (std::size_t o = 0; o < L.out; ++o)
        for (std::size_t j = 0; j < L.bias_basis_size(); ++j) {
            const RealLinearCoeff c = w.bias(o, j);
            const Complex b = c(Complex{1.0, 0.0});
            for (std::size_t q = 0; q < out_len; ++q) {
                bool hit = true;
                if (L.kind == LayerKind::Stab0First || L.kind == LayerKind::Stab0Vector)
                    hit = j == 1 || q == 0;
                else if (L.kind == LayerKind::SmTensor)
                    hit = j == 0 || q / m == q % m;
                if (hit)
                    out.at(o, q) += b;
            }
        }
    return out;
}

Features apply_layer(const LayerWeights& w, const Features& in, Pooling pool)
{
    switch (w.layer.kind) {
    case LayerKind::Stab0First:
    case LayerKind::Stab0Vector: return apply_stab0_layer(in, w, pool);
    case LayerKind::SmTensor:
    case LayerKind::SmVector: return apply_sm_layer(in, w, pool);
    case LayerKind::ComplexPointwise:
    case LayerKind::ComplexSm: return apply_complex_linear(in, w);
    case LayerKind::Dense: {
        Tape t;
        return t.value(op::mix(t, t.leaf(in), w.layer, w.binding()));
    }
    }
    throw std::logic_error("unreachable");
}

struct LayerSpec {
    LayerKind kind;
    std::size_t in, out;
    bool tensor_input;
    bool stab0;
};

const std::vector<LayerSpec>& layer_specs()
{
    static const std::vector<LayerSpec> specs = {
        {LayerKind::Stab0First, 2, 3, false, true},      {LayerKind::Stab0Vector, 2, 3, false, true},
        {LayerKind::SmTensor, 2, 3, true, false},        {LayerKind::SmVector, 2, 3, false, false},
        {LayerKind::ComplexPointwise, 2, 3, false, false}, {LayerKind::ComplexSm, 2, 3, false, false},
    };
    return specs;
}

// ---------------------------------------------------------------------------
// Suites.

std::vector<CheckResult> suite_bases(const VerifyOptions& opt)
{
    Collector c{"bases", {}};

    struct Size {
        int k, l;
        std::size_t n;
    };
    const Size stab0_sizes[] = {{0, 0, 1}, {1, 0, 2}, {0, 1, 2}, {2, 0, 5}, {1, 1, 5},
                                {0, 2, 5}, {2, 1, 15}, {1, 2, 15}, {2, 2, 52}};
    const Size sm_sizes[] = {{1, 1, 2}, {0, 1, 1}, {2, 1, 5}, {0, 2, 2}, {2, 2, 15}};
    for (const auto& s : stab0_sizes) {
        const SpaceTag tag{Group::Stab0, s.k, s.l};
        c.eq("size " + tag.to_string(), double(catalog_stab0(s.k, s.l, 4).size()), double(s.n));
    }
    for (const auto& s : sm_sizes) {
        const SpaceTag tag{Group::Sm, s.k, s.l};
        c.eq("size " + tag.to_string(), double(catalog_sm(s.k, s.l, 4).size()), double(s.n));
    }

    BasisMap broken{SpaceTag{Group::Stab0, 2, 1}, 0, "broken(T e1)", [](const Tensor& t) {
                        Tensor out(1, t.side());
                        for (std::size_t i = 0; i < t.side(); ++i)
                            out(i) = t(i, 1);
                        return out;
                    }};

    std::uint64_t seed = opt.seed;
    for (std::size_t m : {4u, 5u}) {
        double worst = 0.0;
        std::string worst_name;
        std::size_t failed = 0;
        auto run = [&](const BasisMap& b) {
            const auto r = check_equivariance(b, Group::Stab0, m, 2, ++seed, 1e-12);
            if (!r.passed)
                ++failed;
            if (r.max_deviation >= worst) {
                worst = r.max_deviation;
                worst_name = b.name + " " + b.tag.to_string();
            }
        };
        for (const auto& s : stab0_sizes)
            for (const auto& b : catalog_stab0(s.k, s.l, m))
                run(b);
        if (opt.inject_broken_basis)
            run(broken);
        c.le("stab0 catalogs equivariant m=" + std::to_string(m), worst, 1e-12,
             "worst " + worst_name + ", failing maps " + std::to_string(failed));
    }
    for (std::size_t m : {4u, 5u}) {
        double worst = 0.0;
        std::string worst_name;
        for (const auto& s : sm_sizes)
            for (const auto& b : catalog_sm(s.k, s.l, m)) {
                const auto r = check_equivariance(b, Group::Sm, m, 2, ++seed, 1e-12);
                if (r.max_deviation >= worst) {
                    worst = r.max_deviation;
                    worst_name = b.name + " " + b.tag.to_string();
                }
            }
        if (opt.inject_broken_basis && m == 4) {
            BasisMap b = broken;
            b.tag.group = Group::Sm;
            const auto r = check_equivariance(b, Group::Sm, m, 2, ++seed, 1e-12);
            if (r.max_deviation >= worst) {
                worst = r.max_deviation;
                worst_name = b.name;
            }
        }
        c.le("sm catalogs equivariant m=" + std::to_string(m), worst, 1e-12, "worst " + worst_name);
    }

    c.ge("negative control T e1 deviates", check_equivariance(broken, Group::Stab0, 4, 2, ++seed).max_deviation,
         0.1);

    const std::size_t rm = 5;
    c.eq("rank L0(2,1) m=5", double(numerical_rank(catalog_stab0(2, 1, rm), rm, 20, ++seed)), 15);
    c.eq("rank L0(1,1) m=5", double(numerical_rank(catalog_stab0(1, 1, rm), rm, 20, ++seed)), 5);
    c.eq("rank L0(2,2) m=5", double(numerical_rank(catalog_stab0(2, 2, rm), rm, 20, ++seed)), 52);
    c.eq("rank L(2,1) m=5", double(numerical_rank(catalog_sm(2, 1, rm), rm, 20, ++seed)), 5);
    c.eq("rank L(2,2) m=5", double(numerical_rank(catalog_sm(2, 2, rm), rm, 20, ++seed)), 15);

    c.eq("sm fixed-point nullity m=5", double(sm_fixed_point_nullity(5)), 15);
    c.le("sm catalog fixed-point residual m=5", sm_catalog_fixed_point_residual(5), 1e-12);

    {
        Rng rng(opt.seed, 0xF05ED);
        double dev = 0.0, rot = 0.0;
        for (std::size_t m = 2; m <= 6; ++m) {
            const auto maps = catalog_stab0(2, 1, m);
            for (int trial = 0; trial < 5; ++trial) {
                const PointCloud z = random_cloud(m, rng);
                const auto fused = fused_first_layer(z);
                const Tensor g = gram(z);
                const auto turned = fused_first_layer(rotate(z, Rotation(rng.unit_circle())));
                for (std::size_t k = 0; k < 15; ++k) {
                    const Tensor y = maps[k].apply(g);
                    for (std::size_t p = 0; p < m; ++p) {
                        dev = std::max(dev, std::abs(y(p) - fused[k][p]));
                        rot = std::max(rot, std::abs(turned[k][p] - fused[k][p]));
                    }
                }
            }
        }
        c.le("fused first layer matches explicit m=2..6", dev, 1e-12);
        c.le("fused first layer rotation invariant", rot, 1e-12);
    }

    {
        const std::size_t m = 4;
        double worst = 0.0;
        std::string worst_name;
        for (const auto& s : stab0_sizes)
            for (const auto& b : catalog_stab0(s.k, s.l, m)) {
                const auto r = check_equivariance(xi_isomorphism(b, m), Group::Sm, m, 1, ++seed, 1e-12);
                if (r.max_deviation >= worst) {
                    worst = r.max_deviation;
                    worst_name = b.name + " " + b.tag.to_string();
                }
            }
        c.le("xi images S_m-equivariant m=4", worst, 1e-12, "worst " + worst_name);

        const auto w = catalog_stab0(0, 1, m);
        Tensor one(0, 0);
        one() = 1.0;
        const Tensor id = xi_isomorphism(w[0], m).apply(one);
        const Tensor ones = xi_isomorphism(w[1], m).apply(one);
        double d_id = 0.0, d_ones = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                d_id = std::max(d_id, std::abs(id(i, j) - (i == j ? 1.0 : 0.0)));
                d_ones = std::max(d_ones, std::abs(ones(i, j) - 1.0));
            }
        c.le("xi(w0) is the identity matrix", d_id, 0.0);
        c.le("xi(w1) is the all-ones matrix", d_ones, 0.0);
    }
    return c.results;
}

std::vector<CheckResult> suite_layers(const VerifyOptions& opt)
{
    Collector c{"layers", {}};
    Rng rng(opt.seed, 0x1A7E5);

    {
        double dev = 0.0;
        bool contraction = true;
        for (int k = 0; k < 1000; ++k) {
            const Complex z = 2.0 * random_complex(rng);
            const double eta = rng.uniform(0.0, 1.0);
            const Complex th = rng.unit_circle();
            const Complex r = complex_relu(z, eta);
            dev = std::max(dev, std::abs(complex_relu(th * z, eta) - th * r));
            contraction = contraction && std::abs(r) <= std::max(0.0, std::abs(z) - eta) + 1e-15 &&
                          std::abs(r) <= std::abs(z);
        }
        c.le("complex relu rotation equivariant", dev, 1e-12);
        c.flag("complex relu contraction", contraction);
    }

    const std::size_t m = 4;
    const auto stab0 = enumerate_stab0(m);
    const auto sm = enumerate_sm(m);
    for (const Pooling pool : {Pooling::Mean, Pooling::Sum}) {
        const std::string tag = std::string(" (") + pooling_name(pool) + ")";
        for (const auto& s : layer_specs()) {
            const LayerWeights w = random_layer(s.kind, s.in, s.out, rng);
            const std::size_t len = s.tensor_input ? m * m : m;
            double eq = 0.0, oracle = 0.0;
            for (int trial = 0; trial < 3; ++trial) {
                const Features x = random_features(s.in, len, rng);
                const Features y = apply_layer(w, x, pool);
                for (const auto& pi : s.stab0 ? stab0 : sm)
                    eq = std::max(eq, max_diff(apply_layer(w, permute_features(x, pi), pool), permute_features(y, pi)));
                oracle = std::max(oracle, max_diff(y, oracle_layer(w, x, pool)));
            }
            const std::string name = layer_kind_name(s.kind);
            c.le(name + " equivariant over " + (s.stab0 ? "Stab(0)" : "S_m") + " m=4" + tag, eq, 1e-10);
            c.le(name + " matches explicit catalog" + tag, oracle, 1e-10);
        }
    }
    {
        const LayerWeights w = random_layer(LayerKind::Dense, 3, 2, rng);
        const Features x = random_features(3, 1, rng);
        c.le("dense matches explicit sum", max_diff(apply_layer(w, x, Pooling::Mean), oracle_layer(w, x, Pooling::Mean)),
             1e-12);
    }

    for (const auto& s : layer_specs()) {
        if (s.kind == LayerKind::Stab0First)
            continue;
        const LayerWeights w = random_layer(s.kind, s.in, s.out, rng, false);
        const std::size_t len = s.tensor_input ? m * m : m;
        const Features x = random_features(s.in, len, rng);
        const Features y = random_features(s.in, len, rng);
        Features sum = x;
        for (std::size_t k = 0; k < sum.data.size(); ++k)
            sum.data[k] += y.data[k];
        const double r = rng.uniform(-2.0, 2.0);
        Features fx = apply_layer(w, x, Pooling::Mean);
        const Features fy = apply_layer(w, y, Pooling::Mean);
        Features fsum = fx;
        for (std::size_t k = 0; k < fsum.data.size(); ++k)
            fsum.data[k] += fy.data[k];
        const double additive = max_diff(apply_layer(w, sum, Pooling::Mean), fsum);
        const double homogeneous = max_diff(apply_layer(w, scaled(x, r), Pooling::Mean), scaled(fx, r));
        c.le(std::string(layer_kind_name(s.kind)) + " real-linear", std::max(additive, homogeneous), 1e-10);
    }

    {
        const Features v = random_features(3, 6, rng);
        const Features n = l2_normalize_channels(v);
        const Permutation pi = random_permutation(6, rng);
        c.le("l2 normalize permutation equivariant",
             max_diff(l2_normalize_channels(permute_features(v, pi)), permute_features(n, pi)), 1e-12);
        c.le("l2 normalize idempotent", max_diff(l2_normalize_channels(n), n), 1e-12);
    }
    return c.results;
}

std::vector<CheckResult> suite_models(const VerifyOptions& opt)
{
    Collector c{"models", {}};
    Rng rng(opt.seed, 0x30DE15);

    {
        Model nr(make_nr_model({4, 4}, {4, 1}, {4, 1}));
        randomize(nr, rng);
        double rot = 0.0, perm = 0.0;
        const PointCloud z = random_cloud(4, rng);
        const Complex a = weight_unit_ns(z, nr);
        for (int k = 0; k < 10; ++k)
            rot = std::max(rot, std::abs(weight_unit_ns(rotate(z, Rotation(rng.unit_circle())), nr) - a));
        for (const auto& s : enumerate_stab0(4))
            perm = std::max(perm, std::abs(weight_unit_ns(permute(z, s), nr) - a));
        c.le("ns weight unit rotation invariant", rot, 1e-9);
        c.le("ns weight unit Stab(0) invariant m=4", perm, 1e-9);

        const MultiVector zero = vector_unit(PointCloud(std::vector<Complex>(4)), nr);
        c.le("nc vector unit maps 0 to 0", max_abs(zero), 0.0);
    }

    Model broad(make_broad_model());
    randomize(broad, rng);
    {
        const std::size_t m = 4;
        const PointCloud z = random_cloud(m, rng), x = random_cloud(m, rng);
        const MultiVector a = weight_unit_ns_plus(z, &x, broad);
        double perm = 0.0;
        for (const auto& pi : enumerate_sm(m)) {
            const PointCloud zp = permute(z, pi), xp = permute(x, pi);
            perm = std::max(perm, max_diff(weight_unit_ns_plus(zp, &xp, broad), permute_features(a, pi)));
        }
        c.le("ns+ weight unit S_m equivariant m=4", perm, 1e-9);
        const PointCloud zr = rotate(z, Rotation(rng.unit_circle()));
        const PointCloud xr = rotate(x, Rotation(rng.unit_circle()));
        c.le("ns+ weight unit invariant to rotating Z", max_diff(weight_unit_ns_plus(zr, &x, broad), a), 1e-9);
        c.le("ns+ weight unit invariant to rotating X", max_diff(weight_unit_ns_plus(z, &xr, broad), a), 1e-9);

        const MultiVector psi = vector_unit(z, broad);
        const Complex th = rng.unit_circle();
        c.le("nc+ vector unit rotation equivariant",
             max_diff(vector_unit(rotate(z, Rotation(th)), broad), scaled(psi, th)), 1e-10);
        double vperm = 0.0;
        for (const auto& pi : enumerate_sm(m))
            vperm = std::max(vperm, max_diff(vector_unit(permute(z, pi), broad), permute_features(psi, pi)));
        c.le("nc+ vector unit S_m equivariant m=4", vperm, 1e-10);
    }

    for (const bool plus : {false, true}) {
        double worst = 0.0;
        for (std::size_t m : {3u, 4u, 5u, 10u}) {
            Model model(plus ? make_nr_plus_model({4, 4}, {4, 1}, {4, 1}, true) : make_nr_model({4, 4}, {4, 1}, {4, 1}));
            for (int trial = 0; trial < 100; ++trial) {
                randomize(model, rng);
                const PointCloud z = random_cloud(m, rng);
                const Complex th = rng.unit_circle();
                const PointCloud moved = rotate(permute(z, random_permutation(m, rng)), Rotation(th));
                const Complex f = plus ? nr_plus_forward(z, model) : nr_forward(z, model);
                const Complex g = plus ? nr_plus_forward(moved, model) : nr_forward(moved, model);
                worst = std::max(worst, law_error(g, th * f));
            }
        }
        c.le(std::string(plus ? "nr+" : "nr") + " equivariance m=3,4,5,10 x100", worst, 1e-8);
    }

    for (const Pooling pool : {Pooling::Mean, Pooling::Sum}) {
        ModelConfig cfg = make_nr_model({4, 3}, {4, 1}, {3, 1});
        cfg.pooling = pool;
        Model nr(cfg);
        double worst = 0.0, scale = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            randomize(nr, rng);
            const Model plus = embed_nr_in_nr_plus(nr);
            for (std::size_t m : {3u, 5u}) {
                const PointCloud z = random_cloud(m, rng);
                const Complex want = nr_forward(z, nr);
                worst = std::max(worst, law_error(nr_plus_forward(z, plus), want));
                scale = std::max(scale, std::abs(want));
            }
        }
        c.le(std::string("nr embeds into nr+ (") + pooling_name(pool) + ")", worst, 1e-8,
             "largest |output| " + std::to_string(scale));
    }

    {
        const std::size_t m = 4;
        const MultiVector z = as_multivector(random_cloud(m, rng)), x = as_multivector(random_cloud(m, rng));
        const auto [zn, xn] = zz_unit_step(z, x, broad, 0);
        double perm = 0.0;
        for (const auto& pi : enumerate_sm(m)) {
            const auto [zp, xp] = zz_unit_step(permute_features(z, pi), permute_features(x, pi), broad, 0);
            perm = std::max({perm, max_diff(zp, permute_features(zn, pi)), max_diff(xp, permute_features(xn, pi))});
        }
        c.le("zz-unit S_m equivariant m=4", perm, 1e-9);
        const Complex th = rng.unit_circle(), om = rng.unit_circle();
        const auto [zr, xr] = zz_unit_step(scaled(z, th), x, broad, 0);
        c.le("zz-unit Z side follows rotation of Z", std::max(max_diff(zr, scaled(zn, th)), max_diff(xr, xn)), 1e-9);
        const auto [zo, xo] = zz_unit_step(z, scaled(x, om), broad, 0);
        c.le("zz-unit Z side ignores rotation of X", std::max(max_diff(zo, zn), max_diff(xo, scaled(xn, om))), 1e-9);
        const auto [zs, xs] = zz_unit_step(x, z, broad, 0);
        c.le("zz-unit swap symmetry", std::max(max_diff(zs, xn), max_diff(xs, zn)), 0.0);
    }

    Model deep(make_deep_model());
    for (auto* model : {&broad, &deep}) {
        const std::string name = model == &broad ? "broad" : "deep";
        double law = 0.0, swap = 0.0, head = 0.0;
        for (std::size_t m : {3u, 4u, 5u, 10u})
            for (int trial = 0; trial < 100; ++trial) {
                randomize(*model, rng);
                const CloudPair pair(random_cloud(m, rng), random_cloud(m, rng));
                const Permutation pi = random_permutation(m, rng);
                const Rotation th(rng.unit_circle()), om(rng.unit_circle());
                const CloudPair moved(rotate(permute(pair.z, pi), th), rotate(permute(pair.x, pi), om));
                const auto [fzx, fxz] = zz_net_forward(pair, *model);
                const auto [gzx, gxz] = zz_net_forward(moved, *model);
                law = std::max({law, law_error(gzx, th.value() * fzx), law_error(gxz, om.value() * fxz)});
                if (trial < 10) {
                    const auto [szx, sxz] = zz_net_forward(CloudPair(pair.x, pair.z), *model);
                    swap = std::max({swap, std::abs(sxz - fzx), std::abs(szx - fxz)});
                    const Complex h = rotation_head(pair, *model);
                    const Complex want = om.value() * std::conj(th.value()) * h;
                    head = std::max(head, law_error(rotation_head(CloudPair(rotate(pair.z, th), rotate(pair.x, om)), *model),
                                                    want));
                }
            }
        c.le(name + " zz-net law m=3,4,5,10 x100", law, 1e-8);
        c.le(name + " swap identity", swap, 1e-12);
        c.le(name + " rotation head response law", head, 1e-8);

        const CloudPair pair(random_cloud(7, rng), random_cloud(7, rng));
        const Complex a = rotation_head(pair, *model), b = rotation_head(pair, *model);
        c.flag(name + " deterministic", a == b);
    }

    c.flag("broad parameter count in [3000, 5000]",
           broad.parameter_count() >= 3000 && broad.parameter_count() <= 5000,
           std::to_string(broad.parameter_count()));
    c.flag("deep parameter count in [6000, 8000]", deep.parameter_count() >= 6000 && deep.parameter_count() <= 8000,
           std::to_string(deep.parameter_count()));
    return c.results;
}

// ---------------------------------------------------------------------------
// Gradient checks of single operations.

struct GradCase {
    std::string name;
    GraphFn graph;
    CaseFn make;
};

GraphCase inputs_only(std::vector<Features> in) { return GraphCase{std::move(in), {}}; }

std::vector<double> random_params(std::size_t n, Rng& rng)
{
    std::vector<double> p(n);
    for (auto& v : p)
        v = rng.uniform(-1.0, 1.0);
    return p;
}

GradCase layer_case(const std::string& name, LayerKind kind, std::size_t in, std::size_t out, std::size_t ch,
                    std::size_t len, Pooling pool)
{
    const LayerWeights w = LayerWeights::zeros(kind, in, out);
    const LinearLayer layer = w.layer;
    const std::size_t n = w.params.size();
    GraphFn g;
    if (kind == LayerKind::SmTensor)
        g = [layer, pool](Tape& t, std::span<const Var> x, const ParamBinding& p) {
            return op::sm_tensor(t, x[0], layer, p, pool);
        };
    else if (layer.complex_linear())
        g = [layer](Tape& t, std::span<const Var> x, const ParamBinding& p) { return op::complex_mix(t, x[0], layer, p); };
    else
        g = [layer](Tape& t, std::span<const Var> x, const ParamBinding& p) { return op::mix(t, x[0], layer, p); };
    return {name, g, [n, ch, len](Rng& rng) {
                return GraphCase{{random_features(ch, len, rng)}, random_params(n, rng)};
            }};
}

std::vector<GradCase> grad_cases()
{
    const std::size_t m = 5;
    std::vector<GradCase> cases;
    auto unary = [&](const std::string& name, std::function<Var(Tape&, Var)> f, std::size_t ch, std::size_t len) {
        cases.push_back({name, [f](Tape& t, std::span<const Var> x, const ParamBinding&) { return f(t, x[0]); },
                         [ch, len](Rng& rng) { return inputs_only({random_features(ch, len, rng)}); }});
    };
    unary("gram", [](Tape& t, Var x) { return op::gram(t, x); }, 2, m);
    for (const Pooling pool : {Pooling::Mean, Pooling::Sum}) {
        const std::string tag = std::string(" ") + pooling_name(pool);
        unary("fused first" + tag, [pool](Tape& t, Var x) { return op::fused_first(t, x, pool); }, 2, m);
        unary("stab0 vector basis" + tag, [pool](Tape& t, Var x) { return op::stab0_vector_basis(t, x, pool); }, 2, m);
        unary("sm vector basis" + tag, [pool](Tape& t, Var x) { return op::sm_vector_basis(t, x, pool); }, 2, m);
        unary("row pool" + tag, [pool](Tape& t, Var x) { return op::row_pool(t, x, pool); }, 2, m * m);
        unary("point pool" + tag, [pool](Tape& t, Var x) { return op::point_pool(t, x, pool); }, 2, m);
        cases.push_back(layer_case("sm tensor layer" + tag, LayerKind::SmTensor, 2, 3, 2, m * m, pool));
    }
    cases.push_back(layer_case("stab0 first mix", LayerKind::Stab0First, 2, 3, 30, m, Pooling::Mean));
    cases.push_back(layer_case("stab0 vector mix", LayerKind::Stab0Vector, 2, 3, 10, m, Pooling::Mean));
    cases.push_back(layer_case("sm vector mix", LayerKind::SmVector, 2, 3, 4, m, Pooling::Mean));
    cases.push_back(layer_case("dense mix", LayerKind::Dense, 3, 2, 3, 1, Pooling::Mean));
    cases.push_back(layer_case("complex pointwise", LayerKind::ComplexPointwise, 2, 3, 2, m, Pooling::Mean));
    cases.push_back(layer_case("complex sm", LayerKind::ComplexSm, 2, 3, 2, m, Pooling::Mean));
    unary("leaky", [](Tape& t, Var x) { return op::leaky(t, x, 0.01); }, 3, m);
    unary("l2 normalize", [](Tape& t, Var x) { return op::l2_normalize(t, x); }, 3, m);
    cases.push_back({"complex relu",
                     [](Tape& t, std::span<const Var> x, const ParamBinding& p) { return op::complex_relu(t, x[0], 0, p); },
                     [m](Rng& rng) {
                         std::vector<double> eta(3);
                         for (auto& e : eta)
                             e = rng.uniform(0.0, 0.6);
                         return GraphCase{{random_features(3, m, rng)}, eta};
                     }});
    cases.push_back({"multiply",
                     [](Tape& t, std::span<const Var> x, const ParamBinding&) { return op::multiply(t, x[0], x[1]); },
                     [m](Rng& rng) { return inputs_only({random_features(2, m, rng), random_features(2, m, rng)}); }});
    cases.push_back({"concat", [](Tape& t, std::span<const Var> x, const ParamBinding&) { return op::concat(t, x); },
                     [m](Rng& rng) { return inputs_only({random_features(2, m, rng), random_features(1, m, rng)}); }});
    cases.push_back({"stack scalars",
                     [](Tape& t, std::span<const Var> x, const ParamBinding&) { return op::stack_scalars(t, x); },
                     [](Rng& rng) {
                         return inputs_only({random_features(1, 1, rng), random_features(1, 1, rng),
                                             random_features(1, 1, rng)});
                     }});
    cases.push_back({"permute points",
                     [m](Tape& t, std::span<const Var> x, const ParamBinding&) {
                         return op::permute_points(t, x[0], Permutation({2, 0, 4, 1, 3}));
                     },
                     [m](Rng& rng) { return inputs_only({random_features(2, m, rng)}); }});
    cases.push_back({"rotation head",
                     [](Tape& t, std::span<const Var> x, const ParamBinding&) { return op::rotation_head(t, x[0], x[1]); },
                     [](Rng& rng) { return inputs_only({random_features(1, 1, rng), random_features(1, 1, rng)}); }});
    cases.push_back({"squared error",
                     [](Tape& t, std::span<const Var> x, const ParamBinding&) {
                         return op::squared_error(t, x[0], Complex{0.3, -0.4});
                     },
                     [](Rng& rng) { return inputs_only({random_features(1, 1, rng)}); }});
    return cases;
}

std::vector<CheckResult> suite_grad(const VerifyOptions& opt)
{
    Collector c{"grad", {}};
    std::uint64_t seed = opt.seed * 1000;
    for (const auto& gc : grad_cases()) {
        const auto r = check_graph_gradient(gc.graph, gc.make, ++seed);
        c.le("gradient " + gc.name, r.max_rel_error, 1e-4,
             std::to_string(r.checked) + " checked, " + std::to_string(r.skipped) + " skipped" +
                 (r.worst.empty() ? "" : ", worst " + r.worst));
    }
    for (const bool broad : {true, false}) {
        const auto r = check_model_gradient(broad ? make_broad_model() : make_deep_model(), 5, ++seed);
        c.le(std::string("gradient ") + (broad ? "broad" : "deep") + " model m=5", r.max_rel_error, 1e-4,
             std::to_string(r.checked) + " checked, " + std::to_string(r.skipped) + " skipped" +
                 (r.worst.empty() ? "" : ", worst " + r.worst));
    }
    return c.results;
}

std::vector<CheckResult> suite_theorem(const VerifyOptions& opt)
{
    Collector c{"theorem", {}};
    Rng rng(opt.seed, 0x7E0);
    const std::size_t m = 3;
    struct Pair {
        std::vector<int> a, b;
    };
    const Pair good[] = {{{1, 0, 0}, {0, 1, 0}}, {{1, 1, 0}, {0, 0, 2}}, {{2, 0, 1}, {1, 1, 1}}, {{0, 2, 1}, {3, 0, 0}}};
    const Pair bad = {{1, 1, 0}, {0, 1, 0}};

    auto law = [&](const Pair& p, int trials) {
        double worst = 0.0, size = 0.0;
        const auto perms = enumerate_sm(m);
        for (int k = 0; k < trials; ++k) {
            const PointCloud z = random_cloud(m, rng);
            const Complex f = theorem_form(z, p.a, p.b);
            size = std::max(size, std::abs(f));
            for (const auto& pi : perms) {
                const Complex th = rng.unit_circle();
                worst = std::max(worst, law_error(theorem_form(rotate(permute(z, pi), Rotation(th)), p.a, p.b), th * f));
            }
        }
        return std::pair{worst, size};
    };
    for (const auto& p : good) {
        std::ostringstream name;
        name << "representation law a=(" << p.a[0] << p.a[1] << p.a[2] << ") b=(" << p.b[0] << p.b[1] << p.b[2] << ")";
        const auto [worst, size] = law(p, 20);
        c.le(name.str(), worst, 1e-10);
        c.ge(name.str() + " nonzero", size, 1e-3);
    }
    c.ge("negative control unequal degrees breaks the law", law(bad, 5).first, 0.1);
    return c.results;
}

}  // namespace

std::vector<CheckResult> run_suite(const std::string& name, const VerifyOptions& opt)
{
    if (name == "all") {
        std::vector<CheckResult> all;
        for (const auto& s : suite_names()) {
            auto r = run_suite(s, opt);
            all.insert(all.end(), r.begin(), r.end());
        }
        return all;
    }
    if (name == "bases")
        return suite_bases(opt);
    if (name == "layers")
        return suite_layers(opt);
    if (name == "models")
        return suite_models(opt);
    if (name == "grad")
        return suite_grad(opt);
    if (name == "theorem")
        return suite_theorem(opt);
    throw std::invalid_argument("unknown suite '" + name + "'");
}

// ---------------------------------------------------------------------------

std::size_t sm_fixed_point_nullity(std::size_t m)
{
    const std::size_t d = m * m;
    const std::size_t n = d * d;
    std::vector<std::size_t> cycle(m), swap01(m);
    std::iota(swap01.begin(), swap01.end(), std::size_t{0});
    if (m > 1)
        std::swap(swap01[0], swap01[1]);
    for (std::size_t i = 0; i < m; ++i)
        cycle[i] = (i + 1) % m;

    std::vector<std::vector<double>> rows;
    for (const auto& gen : {Permutation(swap01), Permutation(cycle)}) {
        auto pair_fwd = [&](std::size_t r) { return gen(r / m) * m + gen(r % m); };
        auto pair_inv = [&](std::size_t r) { return gen.inverse(r / m) * m + gen.inverse(r % m); };
        // (P A)_{rc} = A_{p^-1(r), c};  (A P)_{rc} = A_{r, p(c)}.
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t col = 0; col < d; ++col) {
                std::vector<double> row(n, 0.0);
                row[pair_inv(r) * d + col] += 1.0;
                row[r * d + pair_fwd(col)] -= 1.0;
                rows.push_back(std::move(row));
            }
    }

    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank; r < rows.size(); ++r)
            if (std::abs(rows[r][col]) > std::abs(rows[piv][col]))
                piv = r;
        if (std::abs(rows[piv][col]) < 1e-9)
            continue;
        std::swap(rows[piv], rows[rank]);
        const auto& p = rows[rank];
        for (std::size_t r = rank + 1; r < rows.size(); ++r) {
            const double f = rows[r][col] / p[col];
            if (f == 0.0)
                continue;
            for (std::size_t k = col; k < n; ++k)
                rows[r][k] -= f * p[k];
        }
        ++rank;
    }
    return n - rank;
}

double sm_catalog_fixed_point_residual(std::size_t m)
{
    std::vector<std::size_t> cycle(m), swap01(m);
    std::iota(swap01.begin(), swap01.end(), std::size_t{0});
    if (m > 1)
        std::swap(swap01[0], swap01[1]);
    for (std::size_t i = 0; i < m; ++i)
        cycle[i] = (i + 1) % m;
    double worst = 0.0;
    for (const auto& b : catalog_sm(2, 2, m))
        for (const auto& gen : {Permutation(swap01), Permutation(cycle)})
            for (std::size_t e = 0; e < m * m; ++e) {
                Tensor t(2, m);
                t.data()[e] = 1.0;
                worst = std::max(worst, max_abs(b.apply(permute_tensor(t, gen)) - permute_tensor(b.apply(t), gen)));
            }
    return worst;
}

// ---------------------------------------------------------------------------

GradCheckReport finite_difference_check(const LossFn& f, std::span<const double> x, double h, double floor)
{
    GradCheckReport rep;
    std::vector<double> analytic(x.size(), 0.0);
    std::uint64_t base = 0;
    f(x, analytic.data(), &base);
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        std::uint64_t pp = 0, pm = 0;
        probe[k] = x[k] + h;
        const double fp = f(probe, nullptr, &pp);
        probe[k] = x[k] - h;
        const double fm = f(probe, nullptr, &pm);
        probe[k] = x[k];
        if (pp != base || pm != base) {
            ++rep.skipped;
            continue;
        }
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[k];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        ++rep.checked;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            std::ostringstream os;
            os << "coordinate " << k << ": analytic " << a << ", numeric " << numeric;
            rep.worst = os.str();
        }
    }
    return rep;
}

namespace {

struct MonitorScope {
    op::KinkMonitor monitor;
    MonitorScope() { op::set_kink_monitor(&monitor); }
    ~MonitorScope() { op::set_kink_monitor(nullptr); }
    MonitorScope(const MonitorScope&) = delete;
    MonitorScope& operator=(const MonitorScope&) = delete;
};

}  // namespace

GradCheckReport check_graph_gradient(const GraphFn& g, const CaseFn& make, std::uint64_t seed)
{
    Rng rng(seed, 0x6AD);
    GradCheckReport rep;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const GraphCase gc = make(rng);
        std::vector<double> x = gc.params;
        for (const auto& f : gc.inputs)
            for (auto v : f.data) {
                x.push_back(v.real());
                x.push_back(v.imag());
            }
        std::vector<Complex> w;

        auto loss = [&](std::span<const double> xs, double* grads, std::uint64_t* pattern) {
            MonitorScope scope;
            Tape t;
            std::vector<Var> leaves;
            std::size_t at = gc.params.size();
            for (const auto& f : gc.inputs) {
                Features v(f.channels, f.length);
                for (auto& e : v.data) {
                    e = {xs[at], xs[at + 1]};
                    at += 2;
                }
                leaves.push_back(t.leaf(std::move(v), true));
            }
            std::vector<double> pgrad(gc.params.size(), 0.0);
            const ParamBinding p{xs.data(), grads ? pgrad.data() : nullptr};
            const Var out = g(t, leaves, p);
            const auto& y = t.value(out).data;
            if (w.empty()) {
                Rng wr(seed, 0x5EED);
                for (std::size_t k = 0; k < y.size(); ++k)
                    w.push_back(random_complex(wr));
            }
            double l = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k)
                l += (std::conj(w[k]) * y[k]).real();
            if (grads) {
                t.backward(out, w);
                std::copy(pgrad.begin(), pgrad.end(), grads);
                std::size_t off = gc.params.size();
                for (std::size_t li = 0; li < leaves.size(); ++li) {
                    const auto gl = t.grad(leaves[li]);
                    const std::size_t count = gc.inputs[li].data.size();
                    for (std::size_t k = 0; k < count; ++k) {
                        const Complex gv = gl.empty() ? Complex{} : gl[k];
                        grads[off + 2 * k] = gv.real();
                        grads[off + 2 * k + 1] = gv.imag();
                    }
                    off += 2 * count;
                }
            }
            if (pattern)
                *pattern = scope.monitor.pattern;
            return l;
        };

        rep = finite_difference_check(loss, x);
        if (rep.skipped * 20 <= x.size())
            return rep;
    }
    return rep;
}

GradCheckReport check_model_gradient(const ModelConfig& cfg, std::size_t m, std::uint64_t seed)
{
    Rng rng(seed, 0x40DE1);
    GradCheckReport rep;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Model model(cfg);
        randomize(model, rng);
        const PointCloud z = random_cloud(m, rng);
        const Rotation theta(rng.unit_circle());
        std::vector<Complex> xs(m);
        for (std::size_t i = 0; i < m; ++i)
            xs[i] = theta.value() * z[i] + 0.05 * random_complex(rng);
        const CloudPair pair(z, PointCloud(xs));
        const std::vector<double> x(model.params().values().begin(), model.params().values().end());

        auto loss = [&](std::span<const double> p, double* grads, std::uint64_t* pattern) {
            MonitorScope scope;
            std::copy(p.begin(), p.end(), model.params().values().begin());
            double l = 0.0;
            if (grads) {
                std::fill(grads, grads + p.size(), 0.0);
                l = loss_and_gradient(model, pair, theta, std::span<double>(grads, p.size())).second;
            } else {
                l = loss_l2(predict(model, pair), theta);
            }
            if (pattern)
                *pattern = scope.monitor.pattern;
            return l;
        };
        rep = finite_difference_check(loss, x);
        if (rep.skipped * 20 <= x.size())
            return rep;
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::size_t, 15> kFirstToSm = {12, 14, 2, 9, 10, 11, 13, 7, 3, 5, 1, 0, 4, 6, 8};
constexpr std::array<std::size_t, 5> kVectorToSm = {3, 0, 2, 9, 7};

void copy_reals(std::span<double> dst, std::size_t to, std::span<const double> src, std::size_t from, std::size_t n)
{
    std::copy(src.begin() + from, src.begin() + from + n, dst.begin() + to);
}

}  // namespace

Model embed_nr_in_nr_plus(const Model& nr)
{
    const ModelConfig& src_cfg = nr.config();
    if (src_cfg.units.size() != 1 || src_cfg.units[0].weight.variant != WeightVariant::NS ||
        src_cfg.units[0].vector.variant != VectorVariant::NC)
        throw std::invalid_argument("embed_nr_in_nr_plus expects a single NS/NC unit");
    const auto& su = src_cfg.units[0];
    ModelConfig cfg = make_nr_plus_model(su.weight.early_channels, su.weight.late_channels, su.vector.channels, false);
    cfg.pooling = src_cfg.pooling;
    cfg.leaky_slope = src_cfg.leaky_slope;
    cfg.eta_init = src_cfg.eta_init;
    Model out(cfg);
    auto dst = out.params().values();
    std::fill(dst.begin(), dst.end(), 0.0);
    const auto src = nr.params().values();
    const UnitLayers& a = nr.unit(0);
    const UnitLayers& b = out.unit(0);

    for (std::size_t l = 0; l < a.weight.early.size(); ++l) {
        const LinearLayer& s = a.weight.early[l];
        const LinearLayer& d = b.weight.early[l];
        for (std::size_t o = 0; o < s.out; ++o) {
            for (std::size_t i = 0; i < s.in; ++i)
                for (std::size_t k = 0; k < s.basis_size(); ++k) {
                    const std::size_t target = l == 0 ? kFirstToSm[k] : kVectorToSm[k];
                    copy_reals(dst, d.coeff_index(o, i, target), src, s.coeff_index(o, i, k), 4);
                }
            copy_reals(dst, d.bias_index(o, 1), src, s.bias_index(o, 0), 4);
            copy_reals(dst, d.bias_index(o, 0), src, s.bias_index(o, 1), 4);
        }
    }
    for (std::size_t l = 0; l < a.weight.late.size(); ++l) {
        const LinearLayer& s = a.weight.late[l];
        const LinearLayer& d = b.weight.late[l];
        for (std::size_t o = 0; o < s.out; ++o) {
            for (std::size_t i = 0; i < s.in; ++i)
                copy_reals(dst, d.coeff_index(o, i, 0), src, s.coeff_index(o, i, 0), 4);
            copy_reals(dst, d.bias_index(o, 0), src, s.bias_index(o, 0), 4);
        }
    }
    for (std::size_t l = 0; l < a.vector.layers.size(); ++l) {
        const LinearLayer& s = a.vector.layers[l];
        const LinearLayer& d = b.vector.layers[l];
        for (std::size_t o = 0; o < s.out; ++o)
            for (std::size_t i = 0; i < s.in; ++i)
                copy_reals(dst, d.coeff_index(o, i, 0), src, s.coeff_index(o, i, 0), 2);
    }
    for (std::size_t l = 0; l < a.vector.eta_offsets.size(); ++l)
        copy_reals(dst, b.vector.eta_offsets[l], src, a.vector.eta_offsets[l], a.vector.layers[l].out);
    return out;
}

Complex invariant_polynomial(const PointCloud& z, std::span<const int> a, std::span<const int> b)
{
    const std::size_t m = z.size();
    if (a.size() != m || b.size() != m)
        throw std::invalid_argument("multi-index length must equal the cloud size");
    Complex total{};
    for (const auto& sigma : enumerate_stab0(m)) {
        const PointCloud s = permute(z, sigma);
        Complex term{1.0, 0.0};
        for (std::size_t k = 0; k < m; ++k) {
            for (int e = 0; e < a[k]; ++e)
                term *= s[k];
            for (int e = 0; e < b[k]; ++e)
                term *= std::conj(s[k]);
        }
        total += term;
    }
    return total;
}

Complex theorem_form(const PointCloud& z, std::span<const int> a, std::span<const int> b)
{
    Complex f{};
    for (std::size_t i = 0; i < z.size(); ++i)
        f += invariant_polynomial(permute(z, tau(i, z.size())), a, b) * z[i];
    return f;
}

}  // namespace zz
