#include "zz/kernels.hpp"
#include "zz/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace zz;
namespace k = zz::kernels;

namespace {

std::vector<Complex> random_vec(std::size_t n, Rng& rng)
{
    std::vector<Complex> v(n);
    for (auto& x : v)
        x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    return v;
}

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("scalar kernels")
{
    const auto& s = k::scalar::table();
    const std::vector<Complex> x = {{1, 2}, {-3, 0.5}};
    std::vector<Complex> y = {{1, 0}, {0, 1}};
    s.rl_axpy(2, {2, 0}, {0, 1}, x.data(), y.data());
    // 2(1+2i) + i(1-2i) = 4+5i, plus 1
    CHECK(y[0] == Complex(5, 5));

    Complex cx, xg;
    const std::vector<Complex> g = {{0, 1}, {1, 0}};
    s.rl_dot(2, x.data(), g.data(), &cx, &xg);
    CHECK(cx == std::conj(x[0]) * g[0] + std::conj(x[1]) * g[1]);
    CHECK(xg == x[0] * g[0] + x[1] * g[1]);

    const double in[4] = {-2, 0, 3, -0.5};
    double out[4];
    s.leaky_forward(4, 0.1, in, out);
    CHECK(out[0] == doctest::Approx(-0.2));
    CHECK(out[2] == 3);
    double gx[4] = {0, 0, 0, 0};
    const double gy[4] = {1, 1, 1, 1};
    s.leaky_backward(4, 0.1, in, gy, gx);
    CHECK(gx[0] == doctest::Approx(0.1));
    CHECK(gx[1] == 0.0);
    CHECK(gx[2] == 1.0);

    std::vector<Complex> o(4);
    const std::vector<Complex> z = {{1, 1}, {2, 0}};
    s.outer_conj(2, z.data(), o.data());
    CHECK(o[1] == Complex(2, 2));
    CHECK(o[2] == Complex(2, -2));
    CHECK(s.sum(2, z.data()) == Complex(3, 1));
}

TEST_CASE("avx2 kernels match the scalar reference")
{
    if (!k::supported(k::Isa::Avx2)) {
        MESSAGE("AVX2 not available on this CPU; skipped");
        return;
    }
    const auto& s = k::table(k::Isa::Scalar);
    const auto& v = k::table(k::Isa::Avx2);
    Rng rng(77);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 17u, 64u, 101u}) {
        CAPTURE(n);
        const auto x = random_vec(n, rng);
        const auto g = random_vec(n, rng);
        const Complex a{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const Complex b{rng.uniform(-1, 1), rng.uniform(-1, 1)};

        auto ys = random_vec(n, rng);
        auto yv = ys;
        s.rl_axpy(n, a, b, x.data(), ys.data());
        v.rl_axpy(n, a, b, x.data(), yv.data());
        CHECK(max_diff(ys, yv) <= 1e-14);

        Complex cs, xs, cv, xv;
        s.rl_dot(n, x.data(), g.data(), &cs, &xs);
        v.rl_dot(n, x.data(), g.data(), &cv, &xv);
        CHECK(std::abs(cs - cv) <= 1e-13);
        CHECK(std::abs(xs - xv) <= 1e-13);
        CHECK(std::abs(s.sum(n, x.data()) - v.sum(n, x.data())) <= 1e-13);

        std::vector<double> re(2 * n), fs(2 * n), fv(2 * n), gs(2 * n, 0.5), gv(2 * n, 0.5), up(2 * n);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            re[i] = rng.uniform(-1, 1);
            up[i] = rng.uniform(-1, 1);
        }
        if (n > 2) {
            re[1] = 0.0;
            re[2] = -0.0;
            re[3] = std::numeric_limits<double>::quiet_NaN();
        }
        s.leaky_forward(2 * n, 0.01, re.data(), fs.data());
        v.leaky_forward(2 * n, 0.01, re.data(), fv.data());
        for (std::size_t i = 0; i < 2 * n; ++i) {
            CHECK(std::isnan(fs[i]) == std::isnan(fv[i]));
            if (!std::isnan(fs[i])) {
                CHECK(fs[i] == fv[i]);
                CHECK(std::signbit(fs[i]) == std::signbit(fv[i]));
            }
        }
        s.leaky_backward(2 * n, 0.01, re.data(), up.data(), gs.data());
        v.leaky_backward(2 * n, 0.01, re.data(), up.data(), gv.data());
        CHECK(gs == gv);

        if (n <= 17) {
            std::vector<Complex> os(n * n), ov(n * n);
            s.outer_conj(n, x.data(), os.data());
            v.outer_conj(n, x.data(), ov.data());
            CHECK(max_diff(os, ov) <= 1e-15);
        }
    }
}

TEST_CASE("isa selection")
{
    const auto before = k::active_isa();
    k::set_active_isa(k::Isa::Scalar);
    CHECK(k::active_isa() == k::Isa::Scalar);
    CHECK(&k::active() == &k::table(k::Isa::Scalar));
    k::set_active_isa(before);
    CHECK(std::string(k::name(k::Isa::Scalar)) == "scalar");
}
