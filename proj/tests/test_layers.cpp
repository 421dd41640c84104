#include "support.hpp"

#include "zz/layers.hpp"
#include "zz/verify.hpp"

#include <doctest.h>

using namespace zz;
using zz::test::close;

namespace {

MultiVector single(const std::vector<Complex>& v)
{
    MultiVector f(1, v.size());
    f.data = v;
    return f;
}

MultiVector random_features(std::size_t channels, std::size_t length, Rng& rng)
{
    MultiVector f(channels, length);
    for (auto& x : f.data)
        x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return f;
}

}  // namespace

TEST_CASE("complex relu examples")
{
    CHECK(close(complex_relu({2, 0}, 0.5), {1.5, 0}));
    CHECK(complex_relu({0, 0.3}, 0.5) == Complex{});
    CHECK(close(complex_relu({3, 4}, 1.0), {2.4, 3.2}));
    CHECK(complex_relu({0, 0}, 0.0) == Complex{});
    CHECK(close(complex_relu({-1, 2}, 0.0), {-1, 2}));
}

TEST_CASE("complex relu commutes with rotation and never grows")
{
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        const Complex z{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double eta = rng.uniform(0, 1);
        const Complex th = rng.unit_circle();
        CHECK(std::abs(complex_relu(th * z, eta) - th * complex_relu(z, eta)) <= 1e-14);
        CHECK(std::abs(complex_relu(z, eta)) <= std::abs(z));
    }
}

TEST_CASE("leaky activation examples")
{
    CHECK(close(leaky_activation({1, -2}, 0.01), {1, -0.02}));
    CHECK(leaky_activation({0.5, 3}, 0.01) == Complex(0.5, 3));
    CHECK(leaky_activation({-0.5, -3}, 1.0) == Complex(-0.5, -3));
}

TEST_CASE("stab0 layer: ones bias gives a constant channel")
{
    auto w = LayerWeights::zeros(LayerKind::Stab0First, 1, 1);
    w.set_bias(0, 1, {{1, 0}, {0, 0}});
    const auto out = apply_stab0_layer(single({{1, 2}, {3, -1}, {0.5, 0.5}}), w);
    for (const auto& x : out.data)
        CHECK(x == Complex(1));
}

TEST_CASE("stab0 layer: K14 gives squared moduli")
{
    for (Pooling pool : {Pooling::Sum, Pooling::Mean}) {
        auto w = LayerWeights::zeros(LayerKind::Stab0First, 1, 1);
        w.set_coeff(0, 0, 14, {{1, 0}, {0, 0}});
        const std::vector<Complex> z = {{1, 2}, {3, -1}, {0.5, 0.5}};
        const auto out = apply_stab0_layer(single(z), w, pool);
        for (std::size_t i = 0; i < z.size(); ++i)
            CHECK(close(out.at(0, i), std::norm(z[i])));
    }
}

TEST_CASE("stab0 layer uses the conjugate coefficient")
{
    auto w = LayerWeights::zeros(LayerKind::Stab0Vector, 1, 1);
    // a = 0, b = 1 on L_0 gives conj(L_0 v).
    const auto ident = catalog_stab0(1, 1, 3);
    w.set_coeff(0, 0, 0, {{0, 0}, {1, 0}});
    const std::vector<Complex> v = {{1, 2}, {3, -1}, {0.5, 0.5}};
    Tensor tv(1, 3);
    for (std::size_t i = 0; i < 3; ++i)
        tv(i) = v[i];
    const Tensor l0 = ident[0].apply(tv);
    const auto out = apply_stab0_layer(single(v), w);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(close(out.at(0, i), std::conj(l0(i))));
}

TEST_CASE("sm layer examples")
{
    Rng rng(8);
    const std::size_t m = 4;
    auto w = LayerWeights::zeros(LayerKind::SmTensor, 1, 1);
    w.set_coeff(0, 0, 0, {{1, 0}, {0, 0}});
    const auto t = random_features(1, m * m, rng);
    const auto out = apply_sm_layer(t, w);
    for (std::size_t k = 0; k < m * m; ++k)
        CHECK(close(out.data[k], t.data[k], 1e-15));

    auto b = LayerWeights::zeros(LayerKind::SmTensor, 1, 1);
    b.set_bias(0, 0, {{1, 0}, {0, 0}});
    for (const auto& x : apply_sm_layer(t, b).data)
        CHECK(x == Complex(1));

    auto v = LayerWeights::zeros(LayerKind::SmVector, 1, 1);
    v.set_coeff(0, 0, 0, {{1, 0}, {0, 0}});
    const auto x = random_features(1, m, rng);
    const auto y = apply_sm_layer(x, v);
    for (std::size_t k = 0; k < m; ++k)
        CHECK(close(y.data[k], x.data[k], 1e-15));
}

TEST_CASE("complex layer examples")
{
    Rng rng(9);
    const auto x = random_features(1, 5, rng);
    auto id = LayerWeights::zeros(LayerKind::ComplexSm, 1, 1);
    id.set_complex_coeff(0, 0, 0, {{1, 0}});
    const auto a = apply_complex_linear(x, id);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(close(a.data[k], x.data[k], 1e-15));

    auto mean = LayerWeights::zeros(LayerKind::ComplexSm, 1, 1);
    mean.set_complex_coeff(0, 0, 1, {{1, 0}});
    Complex avg{};
    for (auto z : x.data)
        avg += z / 5.0;
    for (auto z : apply_complex_linear(x, mean).data)
        CHECK(close(z, avg, 1e-15));

    auto c = LayerWeights::zeros(LayerKind::ComplexPointwise, 1, 2);
    c.set_complex_coeff(1, 0, 0, {{0, 2}});
    const auto y = apply_complex_linear(x, c);
    CHECK(y.channels == 2);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(y.at(0, k) == Complex{});
        CHECK(close(y.at(1, k), Complex(0, 2) * x.at(0, k)));
    }

    // Complex-linear layers commute with rotation.
    auto r = LayerWeights::zeros(LayerKind::ComplexSm, 1, 1);
    r.set_complex_coeff(0, 0, 0, {{0.3, -0.7}});
    r.set_complex_coeff(0, 0, 1, {{1.1, 0.2}});
    const Complex th = rng.unit_circle();
    auto xr = x;
    for (auto& z : xr.data)
        z *= th;
    const auto lhs = apply_complex_linear(xr, r);
    const auto rhs = apply_complex_linear(x, r);
    for (std::size_t k = 0; k < 5; ++k)
        CHECK(std::abs(lhs.data[k] - th * rhs.data[k]) <= 1e-12);
}

TEST_CASE("l2 normalize examples")
{
    MultiVector f(3, 2);
    f.at(0, 0) = 3;
    f.at(0, 1) = 4;
    f.at(2, 0) = Complex(0.6, 0);
    f.at(2, 1) = Complex(0, 0.8);
    const auto g = l2_normalize_channels(f);
    CHECK(close(g.at(0, 0), 0.6));
    CHECK(close(g.at(0, 1), 0.8));
    CHECK(g.at(1, 0) == Complex{});
    CHECK(g.at(1, 1) == Complex{});
    CHECK(close(g.at(2, 0), f.at(2, 0)));
    CHECK(close(g.at(2, 1), f.at(2, 1)));
}

TEST_CASE("random stab0 layers are Stab(0) equivariant and S_m layers S_m equivariant")
{
    Rng rng(10);
    const std::size_t m = 4;
    for (Pooling pool : {Pooling::Sum, Pooling::Mean}) {
        auto w = LayerWeights::zeros(LayerKind::Stab0Vector, 2, 3);
        for (auto& p : w.params)
            p = rng.uniform(-1, 1);
        auto s = LayerWeights::zeros(LayerKind::SmTensor, 2, 2);
        for (auto& p : s.params)
            p = rng.uniform(-1, 1);
        const auto x = random_features(2, m, rng);
        const auto t = random_features(2, m * m, rng);
        const auto y = apply_stab0_layer(x, w, pool);
        const auto u = apply_sm_layer(t, s, pool);
        for (const auto& pi : enumerate_sm(m)) {
            MultiVector xp(2, m), yp(3, m);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    xp.at(c, pi(i)) = x.at(c, i);
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    yp.at(c, pi(i)) = y.at(c, i);
            MultiTensor tp(2, m * m), up(2, m * m);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        tp.at(c, pi(i) * m + pi(j)) = t.at(c, i * m + j);
                        up.at(c, pi(i) * m + pi(j)) = u.at(c, i * m + j);
                    }
            const auto u2 = apply_sm_layer(tp, s, pool);
            for (std::size_t k = 0; k < u2.data.size(); ++k)
                CHECK(std::abs(u2.data[k] - up.data[k]) <= 1e-10);
            if (pi(0) != 0)
                continue;
            const auto y2 = apply_stab0_layer(xp, w, pool);
            for (std::size_t k = 0; k < y2.data.size(); ++k)
                CHECK(std::abs(y2.data[k] - yp.data[k]) <= 1e-10);
        }
    }
}

TEST_CASE("parameter layout")
{
    const auto w = LayerWeights::zeros(LayerKind::SmTensor, 2, 3);
    CHECK(w.layer.basis_size() == 15);
    CHECK(w.layer.bias_basis_size() == 2);
    CHECK(w.params.size() == 4 * (2 * 3 * 15) + 4 * (3 * 2));
    const auto c = LayerWeights::zeros(LayerKind::ComplexSm, 2, 3);
    CHECK(c.layer.complex_linear());
    CHECK(c.params.size() == 2 * (2 * 3 * 2));
    CHECK(std::string(pooling_name(parse_pooling("mean"))) == "mean");
    CHECK_THROWS(parse_pooling("max"));
}
