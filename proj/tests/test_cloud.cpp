#include "support.hpp"

#include "zz/cloud.hpp"
#include "zz/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace zz;
using zz::test::close;

namespace {
const Complex I{0.0, 1.0};
}

TEST_CASE("rotate by a quarter turn")
{
    const PointCloud z({{1, 0}, I});
    const PointCloud r = rotate(z, Rotation(I));
    CHECK(close(r[0], I));
    CHECK(close(r[1], {-1, 0}));
}

TEST_CASE("rotate by the identity leaves the cloud unchanged")
{
    const PointCloud z({{0.3, -2}, {1.5, 0.25}, {-7, 4}});
    CHECK(rotate(z, Rotation()) == z);
}

TEST_CASE("conjugate phase cancels")
{
    const PointCloud z(std::vector<Complex>{{1, 1}});
    const PointCloud r = rotate(z, Rotation(Complex{1, -1} / std::sqrt(2.0)));
    CHECK(close(r[0], {std::sqrt(2.0), 0.0}, 1e-15));
}

TEST_CASE("rotation normalizes and rejects zero")
{
    CHECK(close(Rotation(Complex{3, 4}).value(), {0.6, 0.8}));
    CHECK_THROWS_AS(Rotation(Complex{0, 0}), std::invalid_argument);
    CHECK(close(Rotation::from_angle(std::numbers::pi / 2).value(), I, 1e-15));
}

TEST_CASE("permute by a transposition swaps entries")
{
    const PointCloud z({{1, 0}, {2, 0}, {3, 0}});
    const PointCloud p = permute(z, Permutation({1, 0, 2}));
    CHECK(p == PointCloud({{2, 0}, {1, 0}, {3, 0}}));
    CHECK(permute(z, Permutation::identity(3)) == z);
}

TEST_CASE("permutation action composes")
{
    Rng rng(3);
    std::vector<Complex> pts;
    for (int i = 0; i < 5; ++i)
        pts.push_back(rng.unit_disk());
    const PointCloud z(pts);
    for (const auto& pi : enumerate_sm(5))
        for (const auto& sigma : {Permutation({1, 2, 3, 4, 0}), Permutation({0, 3, 1, 4, 2})})
            CHECK(permute(permute(z, pi), sigma) == permute(z, sigma.compose(pi)));
}

TEST_CASE("invalid permutations are rejected")
{
    CHECK_THROWS(Permutation({0, 0, 1}));
    CHECK_THROWS(Permutation({0, 3, 1}));
    CHECK_THROWS(permute(PointCloud(std::vector<Complex>{{1, 0}}), Permutation({1, 0})));
}

TEST_CASE("permute_tensor")
{
    Tensor t(2, 2);
    t(0, 0) = 1;
    t(0, 1) = 2;
    t(1, 0) = 3;
    t(1, 1) = 4;
    const Tensor same = permute_tensor(t, Permutation::identity(2));
    CHECK(max_abs(same - t) == 0.0);
    const Tensor s = permute_tensor(t, Permutation({1, 0}));
    CHECK(s(0, 0) == t(1, 1));
    CHECK(s(0, 1) == t(1, 0));
}

TEST_CASE("gram commutes with permutation")
{
    Rng rng(11);
    std::vector<Complex> pts;
    for (int i = 0; i < 4; ++i)
        pts.push_back(rng.unit_disk());
    const PointCloud z(pts);
    for (const auto& pi : enumerate_sm(4))
        CHECK(max_abs(permute_tensor(gram(z), pi) - gram(permute(z, pi))) == 0.0);
}

TEST_CASE("tau")
{
    CHECK(tau(0, 3) == Permutation({0, 1, 2}));
    CHECK(tau(2, 3) == Permutation({2, 1, 0}));
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(tau(i, 6).compose(tau(i, 6)) == Permutation::identity(6));
}

TEST_CASE("gram examples")
{
    const GramTensor g = gram(PointCloud({{1, 1}, {2, 0}}));
    CHECK(close(g(0, 0), {2, 0}));
    CHECK(close(g(0, 1), {2, 2}));
    CHECK(close(g(1, 0), {2, -2}));
    CHECK(close(g(1, 1), {4, 0}));
    CHECK(max_abs(gram(PointCloud(std::vector<Complex>(5)))) == 0.0);

    Rng rng(5);
    std::vector<Complex> pts;
    for (int i = 0; i < 7; ++i)
        pts.push_back(rng.unit_disk() * 3.0);
    const PointCloud z(pts);
    CHECK(max_abs(gram(rotate(z, Rotation(I))) - gram(z)) <= 1e-12);
}

TEST_CASE("angular error and thresholds")
{
    const Rotation t = Rotation::from_angle(0.7);
    CHECK(angular_error(t.value(), t) == 0.0);
    CHECK(angular_error(-t.value(), t) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(angle_threshold(1.0) == doctest::Approx(0.0174531).epsilon(1e-5));
    CHECK(angle_threshold(1.0) == 2.0 * std::sin(std::numbers::pi / 360.0));
    // Chord between unit vectors a degrees apart.
    const Rotation off = Rotation::from_angle(0.7 + 5.0 * std::numbers::pi / 180.0);
    CHECK(angular_error(off.value(), t) == doctest::Approx(angle_threshold(5.0)).epsilon(1e-12));
}

TEST_CASE("group enumeration")
{
    CHECK(enumerate_stab0(2) == std::vector<Permutation>{Permutation::identity(2)});
    const auto s4 = enumerate_stab0(4);
    CHECK(s4.size() == 6);
    for (const auto& p : s4)
        CHECK(p(0) == 0);
    CHECK(std::set<std::vector<std::size_t>>(
              [&] {
                  std::set<std::vector<std::size_t>> s;
                  for (const auto& p : s4)
                      s.insert({p.mapping().begin(), p.mapping().end()});
                  return s;
              }())
              .size() == 6);
    CHECK(enumerate_sm(5).size() == 120);
}
