#include "support.hpp"

#include "zz/checkpoint.hpp"
#include "zz/training.hpp"
#include "zz/verify.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace zz;
using zz::test::TempDir;

namespace {

DataGenConfig tiny_data(std::size_t m, std::size_t train, std::size_t val, std::uint64_t seed)
{
    DataGenConfig c;
    c.m = m;
    c.sigma = 0.0;
    c.outlier_ratio = 0.0;
    c.train = train;
    c.val = val;
    c.test = 0;
    c.seed = seed;
    return c;
}

ModelConfig small_model()
{
    ModelConfig cfg;
    ZZUnitConfig u;
    u.weight = {WeightVariant::NSPlus, {2}, {2, 1}, true};
    u.vector = {VectorVariant::NCPlus, {2, 1}};
    cfg.units = {u};
    return cfg;
}

}  // namespace

TEST_CASE("l2 loss examples")
{
    const Rotation t = Rotation::from_angle(1.3);
    CHECK(loss_l2(t.value(), t) == 0.0);
    CHECK(loss_l2(0.0, t) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(loss_l2(-t.value(), t) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("squared error gradient vanishes at the minimum")
{
    const Rotation t = Rotation::from_angle(0.4);
    Tape tape;
    Features f(1, 1);
    f.data[0] = t.value();
    const Var p = tape.leaf(f, true);
    const Var l = op::squared_error(tape, p, t.value());
    tape.backward(l);
    CHECK(tape.grad(p)[0] == Complex{});
    CHECK_THROWS_AS(tape.backward(l), std::logic_error);
}

TEST_CASE("squared error gradient away from the minimum")
{
    // d/dx |x + iy - t|^2 = 2 (x - tx), and likewise for y.
    Tape tape;
    Features f(1, 1);
    f.data[0] = {0.5, -0.25};
    const Var p = tape.leaf(f, true);
    tape.backward(op::squared_error(tape, p, {1.0, 0.0}));
    CHECK(tape.grad(p)[0].real() == doctest::Approx(-1.0));
    CHECK(tape.grad(p)[0].imag() == doctest::Approx(-0.5));
}

TEST_CASE("adam")
{
    TrainConfig cfg;
    AdamState st;
    std::vector<double> p = {1.0, -2.0, 0.5};
    const std::vector<double> zero(3, 0.0);
    adam_step(p, zero, st, 1e-2, cfg);
    CHECK(p == std::vector<double>{1.0, -2.0, 0.5});

    // Constant gradients drive the step size to lr.
    std::vector<double> q = {0.0, 0.0};
    AdamState s2;
    const std::vector<double> g = {0.3, -7.0};
    std::vector<double> prev = q;
    for (int k = 0; k < 1000; ++k) {
        prev = q;
        adam_step(q, g, s2, 1e-3, cfg);
    }
    CHECK(std::abs(q[0] - prev[0]) == doctest::Approx(1e-3).epsilon(0.1));
    CHECK(std::abs(q[1] - prev[1]) == doctest::Approx(1e-3).epsilon(0.1));
    CHECK(q[0] < 0.0);
    CHECK(q[1] > 0.0);

    // Thresholds stay non-negative.
    std::vector<double> e = {0.001, 0.001};
    std::vector<bool> mask = {true, false};
    AdamState s3;
    const std::vector<double> up = {1.0, 1.0};
    adam_step(e, up, s3, 0.1, cfg, &mask);
    CHECK(e[0] == 0.0);
    CHECK(e[1] < 0.0);
}

TEST_CASE("adam is elementwise")
{
    TrainConfig cfg;
    Rng rng(3);
    std::vector<double> a(6), ga(6);
    for (std::size_t i = 0; i < 6; ++i) {
        a[i] = rng.uniform(-1, 1);
        ga[i] = rng.uniform(-1, 1);
    }
    const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
    std::vector<double> b(6), gb(6);
    for (std::size_t i = 0; i < 6; ++i) {
        b[i] = a[perm[i]];
        gb[i] = ga[perm[i]];
    }
    AdamState sa, sb;
    for (int k = 0; k < 5; ++k) {
        adam_step(a, ga, sa, 1e-2, cfg);
        adam_step(b, gb, sb, 1e-2, cfg);
    }
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(b[i] == a[perm[i]]);
}

TEST_CASE("learning rate schedule")
{
    TrainConfig cfg;
    CHECK(learning_rate(cfg, 0) == 5e-3);
    CHECK(learning_rate(cfg, 69) == 5e-3);
    CHECK(learning_rate(cfg, 70) == 2.5e-3);
    CHECK(learning_rate(cfg, 160) == 1.25e-3);
    CHECK(learning_rate(cfg, 200) == 1.25e-3);
    cfg.lr = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lr = 1e-3;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("evaluation report")
{
    const std::vector<Rotation> truth = {Rotation::from_angle(0.1), Rotation::from_angle(2.0)};
    const std::vector<Complex> perfect = {truth[0].value(), truth[1].value()};
    const auto a = summarize(perfect, truth);
    CHECK(a.acc1 == 1.0);
    CHECK(a.acc5 == 1.0);
    CHECK(a.acc10 == 1.0);
    CHECK(a.count == 2);
    const std::vector<Complex> zero(2);
    const auto b = summarize(zero, truth);
    CHECK(b.acc1 == 0.0);
    CHECK(b.acc5 == 0.0);
    CHECK(b.acc10 == 0.0);
    CHECK(b.mean_error == doctest::Approx(1.0));
    // 3 degrees off passes 5 and 10 only.
    const std::vector<Complex> off = {Rotation::from_angle(0.1 + 3.0 * M_PI / 180).value(), truth[1].value()};
    const auto c = summarize(off, truth);
    CHECK(c.acc1 == 0.5);
    CHECK(c.acc5 == 1.0);
    for (const char* key : {"acc_1deg", "acc_5deg", "acc_10deg", "mean_error", "count"})
        CHECK(c.to_json().find(key) != std::string::npos);
}

TEST_CASE("gradient check on a two-point, two-channel model")
{
    const auto r = check_model_gradient(small_model(), 2, 5);
    CAPTURE(r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("linear-only graph: gradient follows the product rule")
{
    // L = Re(conj(w) * c * s * z) for one complex coefficient c; dL/dc scales with s.
    const Complex z{0.3, -0.8}, w{0.6, 0.2}, c{1.1, -0.4};
    for (double s : {1.0, 2.5, -3.0}) {
        auto lw = LayerWeights::zeros(LayerKind::ComplexPointwise, 1, 1);
        lw.set_complex_coeff(0, 0, 0, {c});
        std::vector<double> grads(lw.params.size(), 0.0);
        Tape t;
        Features f(1, 1);
        f.data[0] = s * z;
        const Var in = t.leaf(f);
        const Var out = op::complex_mix(t, in, lw.layer, ParamBinding{lw.params.data(), grads.data()});
        const Complex seed[] = {w};
        t.backward(out, seed);
        // d Re(conj(w) c x)/d(c.re) = Re(conj(w) x), d/d(c.im) = Re(conj(w) i x)
        const Complex x = s * z;
        CHECK(grads[0] == doctest::Approx((std::conj(w) * x).real()).epsilon(1e-14));
        CHECK(grads[1] == doctest::Approx((std::conj(w) * Complex(0, 1) * x).real()).epsilon(1e-14));
    }
}

TEST_CASE("finite difference helper")
{
    const LossFn f = [](std::span<const double> x, double* g, std::uint64_t* pat) {
        if (g) {
            g[0] = 2 * x[0];
            g[1] = std::cos(x[1]);
        }
        if (pat)
            *pat = 0;
        return x[0] * x[0] + std::sin(x[1]);
    };
    const std::vector<double> x = {0.7, -0.3};
    const auto r = finite_difference_check(f, x);
    CHECK(r.checked == 2);
    CHECK(r.max_rel_error <= 1e-8);

    const LossFn wrong = [&](std::span<const double> x, double* g, std::uint64_t* pat) {
        const double v = f(x, g, pat);
        if (g)
            g[1] *= 1.01;
        return v;
    };
    CHECK(finite_difference_check(wrong, x).max_rel_error > 1e-3);
}

TEST_CASE("training smoke test reduces the loss")
{
    const Dataset data = generate_dataset(tiny_data(4, 2, 0, 1));
    Model model(small_model());
    model.initialize(3);
    std::vector<double> grad(model.parameter_count());
    auto total = [&] {
        double s = 0.0;
        for (const auto& e : data.train)
            s += loss_l2(predict(model, e.pair), e.theta);
        return s;
    };
    const double before = total();
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 2;
    cfg.lr = 1e-2;
    cfg.schedule.clear();
    train(model, data.train, {}, cfg);
    CHECK(total() < before);
}

TEST_CASE("training is reproducible and resumable")
{
    const Dataset data = generate_dataset(tiny_data(4, 6, 2, 2));
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;
    cfg.seed = 11;

    auto run = [&](int epochs) {
        Model m(small_model());
        m.initialize(cfg.seed);
        TrainConfig c = cfg;
        c.epochs = epochs;
        std::vector<double> losses;
        const TrainState st = train(m, data.train, data.val, c,
                                    [&](const EpochMetrics& em, const Model&, const TrainState&) {
                                        losses.push_back(em.train_loss);
                                    });
        return std::tuple{std::vector<double>(m.params().values().begin(), m.params().values().end()), losses, st};
    };
    const auto [p1, l1, s1] = run(4);
    const auto [p2, l2, s2] = run(4);
    CHECK(p1 == p2);
    CHECK(l1 == l2);
    CHECK(s1.next_epoch == 4);

    // Two epochs, checkpoint, two more epochs.
    TempDir dir;
    const auto [pa, la, sa] = run(2);
    Model half(small_model());
    std::copy(pa.begin(), pa.end(), half.params().values().begin());
    save_checkpoint(half, dir.str("half.zzn"), &sa);
    LoadedCheckpoint ck = load_checkpoint(dir.str("half.zzn"));
    REQUIRE(ck.state.has_value());
    CHECK(ck.state->next_epoch == 2);
    const TrainState done = train(ck.model, data.train, data.val, cfg, {}, *ck.state);
    CHECK(done.next_epoch == 4);
    CHECK(done.adam.step == s1.adam.step);
    CHECK(std::vector<double>(ck.model.params().values().begin(), ck.model.params().values().end()) == p1);
}

TEST_CASE("non-finite loss aborts with a diagnostic")
{
    Dataset data = generate_dataset(tiny_data(4, 2, 0, 3));
    Model model(small_model());
    model.initialize(1);
    model.params().values()[0] = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    try {
        train(model, data.train, {}, cfg);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(e.epoch == 0);
        CHECK(e.batch == 0);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip is bit exact")
{
    TempDir dir;
    for (const auto& cfg : {make_broad_model(), make_deep_model()}) {
        Model model(cfg);
        model.initialize(9);
        Rng rng(10);
        for (auto& v : model.params().values())
            v += rng.uniform(-0.1, 0.1);
        model.params().clamp_eta();
        save_checkpoint(model, dir.str("m.zzn"));
        const LoadedCheckpoint ck = load_checkpoint(dir.str("m.zzn"));
        CHECK_FALSE(ck.state.has_value());
        CHECK(ck.model.config().to_text() == model.config().to_text());
        const CloudPair p(random_cloud(6, rng), random_cloud(6, rng));
        CHECK(rotation_head(p, ck.model) == rotation_head(p, model));
    }
}

TEST_CASE("checkpoint errors")
{
    TempDir dir;
    Model model(small_model());
    model.initialize(1);
    CHECK_THROWS(save_checkpoint(model, ""));
    CHECK_THROWS_AS(load_checkpoint(""), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(dir.str("missing.zzn")), CheckpointError);

    save_checkpoint(model, dir.str("ok.zzn"));
    std::string bytes = zz::test::slurp(dir.path() / "ok.zzn");
    auto write = [&](const std::string& name, const std::string& b) {
        std::ofstream(dir.path() / name, std::ios::binary) << b;
        return dir.str(name);
    };

    const std::string text = model.config().to_text();
    const std::size_t hash_at = 5 + 4 + 8 + text.size();
    std::string bad_hash = bytes;
    bad_hash[hash_at] ^= 0x01;
    CHECK_THROWS_AS(load_checkpoint(write("hash.zzn", bad_hash)), CheckpointError);

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_checkpoint(write("magic.zzn", bad_magic)), CheckpointError);

    std::string bad_version = bytes;
    bad_version[5] = 9;
    CHECK_THROWS_AS(load_checkpoint(write("version.zzn", bad_version)), CheckpointError);

    for (std::size_t cut : {std::size_t{3}, hash_at + 10, bytes.size() - 1})
        CHECK_THROWS_AS(load_checkpoint(write("cut.zzn", bytes.substr(0, cut))), CheckpointError);

    CHECK_THROWS_AS(load_checkpoint(write("extra.zzn", bytes + "x")), CheckpointError);
}

TEST_CASE("catalog hash is SHA-256 of the signature")
{
    const auto h = catalog_hash();
    CHECK(h == catalog_hash());
    bool nonzero = false;
    for (auto b : h)
        nonzero |= b != 0;
    CHECK(nonzero);
}
