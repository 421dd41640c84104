#include "support.hpp"

#include "zz/networks.hpp"
#include "zz/verify.hpp"

#include <doctest.h>

using namespace zz;
using zz::test::close;

namespace {

void set_bias(Model& model, const LinearLayer& layer, std::size_t o, std::size_t j, Complex c)
{
    auto v = model.params().values();
    const std::size_t at = layer.bias_index(o, j);
    v[at] = c.real();
    v[at + 1] = c.imag();
}

void set_complex_coeff(Model& model, const LinearLayer& layer, std::size_t o, std::size_t i, std::size_t k, Complex c)
{
    auto v = model.params().values();
    const std::size_t at = layer.coeff_index(o, i, k);
    v[at] = c.real();
    v[at + 1] = c.imag();
}

void randomize(Model& model, std::uint64_t seed)
{
    model.initialize(seed);
    Rng rng(seed, 99);
    const auto& mask = model.params().eta_mask();
    auto v = model.params().values();
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = mask[i] ? rng.uniform(0.0, 0.2) : rng.uniform(-0.5, 0.5);
}

ZZUnitConfig constant_unit(bool two_cloud)
{
    ZZUnitConfig u;
    u.weight = {WeightVariant::NSPlus, {1}, {1}, two_cloud};
    u.vector = {VectorVariant::NCPlus, {1}};
    u.normalize_weights = false;
    return u;
}

/// alpha+ == 1 and psi+ == identity.
Model constant_plus_model(bool two_cloud)
{
    ModelConfig cfg;
    cfg.units = {constant_unit(two_cloud)};
    Model model(cfg);
    set_bias(model, model.unit(0).weight.late.back(), 0, 0, 1.0);
    set_complex_coeff(model, model.unit(0).vector.layers.back(), 0, 0, 0, 1.0);
    return model;
}

Complex total(const PointCloud& z)
{
    Complex s{};
    for (auto p : z.points())
        s += p;
    return s;
}

}  // namespace

TEST_CASE("model configurations")
{
    const Model broad(make_broad_model());
    const Model deep(make_deep_model());
    CHECK(broad.parameter_count() >= 3000);
    CHECK(broad.parameter_count() <= 5000);
    CHECK(deep.parameter_count() >= 6000);
    CHECK(deep.parameter_count() <= 8000);
    CHECK(make_broad_model().units.size() == 1);
    CHECK(make_deep_model().units.size() == 3);
    CHECK(make_broad_model().units[0].weight.late_channels == std::vector<std::size_t>{4, 16, 4, 1});
    CHECK(make_deep_model().units[2].weight.late_channels == std::vector<std::size_t>{4, 8, 1});

    for (const auto& cfg : {make_broad_model(), make_deep_model(), make_nr_model({3}, {2, 1}, {2, 1})}) {
        const auto again = ModelConfig::parse(cfg.to_text());
        CHECK(again.to_text() == cfg.to_text());
    }
    CHECK_THROWS_AS(ModelConfig::parse("zznet-model 1\n"), std::invalid_argument);

    ModelConfig bad = make_deep_model();
    bad.units[0].vector.channels = {5};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("NS weight unit: final bias gives a constant")
{
    Model model(make_nr_model({3, 2}, {2, 1}, {1}));
    const Complex c{0.25, -1.5};
    set_bias(model, model.unit(0).weight.late.back(), 0, 0, c);
    Rng rng(1);
    for (int t = 0; t < 5; ++t)
        CHECK(weight_unit_ns(random_cloud(4, rng), model) == c);
}

TEST_CASE("NS weight unit invariances")
{
    Model model(make_nr_model({3, 2}, {4, 1}, {1}));
    randomize(model, 2);
    Rng rng(3);
    const PointCloud z = random_cloud(4, rng);
    const Complex a = weight_unit_ns(z, model);
    for (int t = 0; t < 10; ++t)
        CHECK(std::abs(weight_unit_ns(rotate(z, Rotation(rng.unit_circle())), model) - a) <= 1e-9);
    for (const auto& s : enumerate_stab0(4))
        CHECK(std::abs(weight_unit_ns(permute(z, s), model) - a) <= 1e-9);
}

TEST_CASE("vector unit: single identity layer")
{
    Model model(make_nr_model({1}, {1}, {1}));
    set_complex_coeff(model, model.unit(0).vector.layers[0], 0, 0, 0, 1.0);
    Rng rng(4);
    const PointCloud z = random_cloud(5, rng);
    const auto psi = vector_unit(z, model);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(psi.at(0, i) == z[i]);
}

TEST_CASE("vector unit maps zero to zero and commutes with rotation")
{
    Model model(make_nr_model({1}, {1}, {3, 2, 1}));
    randomize(model, 5);
    const auto zero = vector_unit(PointCloud(std::vector<Complex>(4)), model);
    for (const auto& x : zero.data)
        CHECK(x == Complex{});
    Rng rng(6);
    const PointCloud z = random_cloud(6, rng);
    const Complex th = rng.unit_circle();
    const auto a = vector_unit(rotate(z, Rotation(th)), model);
    const auto b = vector_unit(z, model);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        CHECK(std::abs(a.data[i] - th * b.data[i]) <= 1e-10);
}

TEST_CASE("NR with constant weights and identity vector unit")
{
    Model model(make_nr_model({2}, {1}, {1}));
    set_bias(model, model.unit(0).weight.late.back(), 0, 0, 1.0);
    set_complex_coeff(model, model.unit(0).vector.layers[0], 0, 0, 0, 1.0);
    Rng rng(7);
    const PointCloud z = random_cloud(6, rng);
    CHECK(close(nr_forward(z, model), total(z), 1e-14));
    randomize(model, 8);
    CHECK(nr_forward(PointCloud(std::vector<Complex>(5)), model) == Complex{});
}

TEST_CASE("NR and NR+ equivariance")
{
    Model nr(make_nr_model({3, 2}, {4, 1}, {3, 1}));
    Model plus(make_nr_plus_model({3, 2}, {4, 1}, {3, 1}, true));
    randomize(nr, 9);
    randomize(plus, 10);
    Rng rng(11);
    for (std::size_t m : {3u, 5u, 10u})
        for (int t = 0; t < 10; ++t) {
            const PointCloud z = random_cloud(m, rng);
            const Rotation th(rng.unit_circle());
            const Permutation pi = random_permutation(m, rng);
            const PointCloud moved = rotate(permute(z, pi), th);
            const Complex a = nr_forward(z, nr);
            CHECK(std::abs(nr_forward(moved, nr) - th.value() * a) <= 1e-8 * (1 + std::abs(a)));
            const Complex b = nr_plus_forward(z, plus);
            CHECK(std::abs(nr_plus_forward(moved, plus) - th.value() * b) <= 1e-8 * (1 + std::abs(b)));
        }
}

TEST_CASE("NR+ with constant weights and identity vector unit")
{
    const Model model = constant_plus_model(false);
    Rng rng(12);
    const PointCloud z = random_cloud(7, rng);
    CHECK(close(nr_plus_forward(z, model), total(z), 1e-14));
}

TEST_CASE("NR embeds into NR+")
{
    for (Pooling pool : {Pooling::Mean, Pooling::Sum}) {
        ModelConfig cfg = make_nr_model({3, 2}, {4, 2, 1}, {2, 1});
        cfg.pooling = pool;
        Model nr(cfg);
        randomize(nr, 13);
        const Model plus = embed_nr_in_nr_plus(nr);
        Rng rng(14);
        for (std::size_t m : {3u, 4u, 6u}) {
            const PointCloud z = random_cloud(m, rng);
            const Complex a = nr_forward(z, nr);
            CHECK(std::abs(nr_plus_forward(z, plus) - a) <= 1e-8 * (1 + std::abs(a)));
        }
    }
}

TEST_CASE("NS+ weight unit: equivariance, invariance, degenerate cloud")
{
    ModelConfig cfg = make_deep_model();
    Model model(cfg);
    randomize(model, 15);
    Rng rng(16);
    const PointCloud z = random_cloud(4, rng), x = random_cloud(4, rng);
    const auto a = weight_unit_ns_plus(z, &x, model);
    for (const auto& pi : enumerate_sm(4)) {
        const PointCloud zp = permute(z, pi), xp = permute(x, pi);
        const auto b = weight_unit_ns_plus(zp, &xp, model);
        for (std::size_t c = 0; c < a.channels; ++c)
            for (std::size_t i = 0; i < 4; ++i)
                CHECK(std::abs(b.at(c, pi(i)) - a.at(c, i)) <= 1e-9);
    }
    const PointCloud zr = rotate(z, Rotation(rng.unit_circle()));
    const PointCloud xr = rotate(x, Rotation(rng.unit_circle()));
    const auto b1 = weight_unit_ns_plus(zr, &x, model);
    const auto b2 = weight_unit_ns_plus(z, &xr, model);
    for (std::size_t k = 0; k < a.data.size(); ++k) {
        CHECK(std::abs(b1.data[k] - a.data[k]) <= 1e-9);
        CHECK(std::abs(b2.data[k] - a.data[k]) <= 1e-9);
    }
    // normalized channels
    for (std::size_t c = 0; c < a.channels; ++c) {
        double n = 0.0;
        for (auto v : a.channel(c))
            n += std::norm(v);
        CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
    }

    const PointCloud one(std::vector<Complex>{{0.3, 0.4}}), other(std::vector<Complex>{{-0.1, 0.9}});
    const auto d = weight_unit_ns_plus(one, &other, model);
    CHECK(d.length == 1);
    CHECK(d.channels == cfg.units[0].weight.late_channels.back());
    CHECK_THROWS_AS(weight_unit_ns_plus(z, nullptr, model), std::invalid_argument);
    const PointCloud short_x = random_cloud(3, rng);
    CHECK_THROWS_AS(weight_unit_ns_plus(z, &short_x, model), std::invalid_argument);
}

TEST_CASE("ZZ-unit step laws")
{
    Model model(make_deep_model());
    randomize(model, 17);
    Rng rng(18);
    const PointCloud z = random_cloud(4, rng), x = random_cloud(4, rng);
    const auto zm = as_multivector(z), xm = as_multivector(x);
    const auto [nz, nx] = zz_unit_step(zm, xm, model, 0);
    for (const auto& pi : enumerate_sm(4)) {
        const auto [pz, px] = zz_unit_step(as_multivector(permute(z, pi)), as_multivector(permute(x, pi)), model, 0);
        for (std::size_t c = 0; c < nz.channels; ++c)
            for (std::size_t i = 0; i < 4; ++i) {
                CHECK(std::abs(pz.at(c, pi(i)) - nz.at(c, i)) <= 1e-9);
                CHECK(std::abs(px.at(c, pi(i)) - nx.at(c, i)) <= 1e-9);
            }
    }
    const Complex th = rng.unit_circle();
    const auto [rz, rx] = zz_unit_step(as_multivector(rotate(z, Rotation(th))), xm, model, 0);
    for (std::size_t k = 0; k < nz.data.size(); ++k) {
        CHECK(std::abs(rz.data[k] - th * nz.data[k]) <= 1e-9);
        CHECK(std::abs(rx.data[k] - nx.data[k]) <= 1e-9);
    }
    const auto [sx, sz] = zz_unit_step(xm, zm, model, 0);
    CHECK(sx.data == nx.data);
    CHECK(sz.data == nz.data);
}

TEST_CASE("ZZ-net laws")
{
    for (const auto& cfg : {make_broad_model(), make_deep_model()}) {
        Model model(cfg);
        randomize(model, 19);
        Rng rng(20);
        for (std::size_t m : {3u, 4u, 10u}) {
            const CloudPair p(random_cloud(m, rng), random_cloud(m, rng));
            const auto [f, g] = zz_net_forward(p, model);
            const Rotation th(rng.unit_circle()), om(rng.unit_circle());
            const Permutation pi = random_permutation(m, rng);
            const CloudPair moved(rotate(permute(p.z, pi), th), rotate(permute(p.x, pi), om));
            const auto [f2, g2] = zz_net_forward(moved, model);
            CHECK(std::abs(f2 - th.value() * f) <= 1e-8 * (1 + std::abs(f)));
            CHECK(std::abs(g2 - om.value() * g) <= 1e-8 * (1 + std::abs(g)));

            const auto [s0, s1] = zz_net_forward(CloudPair(p.x, p.z), model);
            CHECK(s0 == g);
            CHECK(s1 == f);

            const Complex h = rotation_head(p, model);
            const Complex h2 = rotation_head(CloudPair(rotate(p.z, th), rotate(p.x, om)), model);
            CHECK(std::abs(h2 - om.value() * std::conj(th.value()) * h) <= 1e-8 * (1 + std::abs(h)));
            const Complex h3 = rotation_head(CloudPair(rotate(p.z, th), rotate(p.x, th)), model);
            CHECK(std::abs(h3 - h) <= 1e-8 * (1 + std::abs(h)));
            CHECK(rotation_head(p, model) == h);
        }
    }
}

TEST_CASE("single constant-weight ZZ-unit sums the products")
{
    const Model model = constant_plus_model(true);
    Rng rng(21);
    const CloudPair p(random_cloud(5, rng), random_cloud(5, rng));
    const auto [f, g] = zz_net_forward(p, model);
    CHECK(close(f, total(p.z), 1e-14));
    CHECK(close(g, total(p.x), 1e-14));

    const CloudPair pos(PointCloud({{1, 0.5}, {0.5, -0.5}}), PointCloud({{2, 0}, {0.25, 0}}));
    const Complex h = rotation_head(pos, model);
    CHECK(h.real() > 0.0);
    CHECK(std::abs(h.imag()) <= 1e-15);
}
