#include "zz/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <limits>
#include <stdexcept>
#include <string>

namespace zz {

namespace {

constexpr std::size_t kMaxEnumerationSize = 7;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

PointCloud::PointCloud(std::vector<Complex> points)
  : points_(std::move(points))
{
    if (points_.empty())
        throw std::invalid_argument("point cloud must contain at least one point");
    for (const auto& p : points_)
        if (!finite(p))
            throw std::invalid_argument("point cloud contains a non-finite coordinate");
}

CloudPair::CloudPair(PointCloud z_, PointCloud x_)
  : z(std::move(z_)), x(std::move(x_))
{
    if (z.size() != x.size())
        throw std::invalid_argument("cloud pair lengths differ: " + std::to_string(z.size()) + " vs " +
                                    std::to_string(x.size()));
}

Rotation::Rotation(Complex v)
{
    if (!finite(v))
        throw std::invalid_argument("rotation value is not finite");
    const double r = std::abs(v);
    if (r < 1e-12)
        throw std::invalid_argument("rotation value too close to zero to normalize");
    // Values already on the circle are kept bit-exact so they survive serialization.
    value_ = std::abs(r - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? v : v / r;
}

Rotation Rotation::from_angle(double radians) { return Rotation(std::polar(1.0, radians)); }

Permutation::Permutation(std::vector<std::size_t> mapping)
  : forward_(std::move(mapping)), inverse_(forward_.size(), forward_.size())
{
    for (std::size_t i = 0; i < forward_.size(); ++i) {
        const std::size_t j = forward_[i];
        if (j >= forward_.size() || inverse_[j] != forward_.size())
            throw std::invalid_argument("mapping is not a bijection on [m]");
        inverse_[j] = i;
    }
}

Permutation Permutation::identity(std::size_t m)
{
    std::vector<std::size_t> id(m);
    std::iota(id.begin(), id.end(), std::size_t{0});
    return Permutation(std::move(id));
}

Permutation Permutation::compose(const Permutation& other) const
{
    if (other.size() != size())
        throw std::invalid_argument("cannot compose permutations of different sizes");
    std::vector<std::size_t> out(size());
    for (std::size_t i = 0; i < size(); ++i)
        out[i] = forward_[other.forward_[i]];
    return Permutation(std::move(out));
}

Permutation Permutation::inverted() const { return Permutation(inverse_); }

Tensor::Tensor(std::size_t order, std::size_t m)
  : order_(order), m_(m)
{
    if (order > 3)
        throw std::invalid_argument("tensor order must be at most 3");
    std::size_t n = 1;
    for (std::size_t k = 0; k < order; ++k)
        n *= m;
    data_.assign(n, Complex{});
}

Tensor& Tensor::operator+=(const Tensor& o)
{
    if (o.order_ != order_ || o.m_ != m_)
        throw std::invalid_argument("tensor shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k)
        data_[k] += o.data_[k];
    return *this;
}

Tensor& Tensor::operator*=(Complex s)
{
    for (auto& v : data_)
        v *= s;
    return *this;
}

Tensor operator-(const Tensor& a, const Tensor& b)
{
    if (a.order() != b.order() || a.side() != b.side())
        throw std::invalid_argument("tensor shape mismatch");
    Tensor out(a.order(), a.side());
    for (std::size_t k = 0; k < a.numel(); ++k)
        out.data()[k] = a.data()[k] - b.data()[k];
    return out;
}

double max_abs(const Tensor& t)
{
    double best = 0.0;
    for (const auto& v : t.data())
        best = std::max(best, std::abs(v));
    return best;
}

PointCloud rotate(const PointCloud& cloud, const Rotation& theta)
{
    std::vector<Complex> out(cloud.points().begin(), cloud.points().end());
    for (auto& p : out)
        p *= theta.value();
    return PointCloud(std::move(out));
}

PointCloud permute(const PointCloud& cloud, const Permutation& pi)
{
    if (pi.size() != cloud.size())
        throw std::invalid_argument("permutation length does not match cloud length");
    std::vector<Complex> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out[i] = cloud[pi.inverse(i)];
    return PointCloud(std::move(out));
}

Tensor permute_tensor(const Tensor& t, const Permutation& pi)
{
    const std::size_t m = t.side();
    if (t.order() > 0 && pi.size() != m)
        throw std::invalid_argument("permutation length does not match tensor side");
    Tensor out(t.order(), m);
    switch (t.order()) {
    case 0:
        out() = t();
        break;
    case 1:
        for (std::size_t i = 0; i < m; ++i)
            out(i) = t(pi.inverse(i));
        break;
    case 2:
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                out(i, j) = t(pi.inverse(i), pi.inverse(j));
        break;
    case 3:
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < m; ++k)
                    out(i, j, k) = t(pi.inverse(i), pi.inverse(j), pi.inverse(k));
        break;
    }
    return out;
}

Permutation tau(std::size_t i, std::size_t m)
{
    if (i >= m)
        throw std::out_of_range("tau index " + std::to_string(i) + " outside [0, " + std::to_string(m) + ")");
    std::vector<std::size_t> map(m);
    std::iota(map.begin(), map.end(), std::size_t{0});
    std::swap(map[0], map[i]);
    return Permutation(std::move(map));
}

GramTensor gram(const PointCloud& cloud)
{
    const std::size_t m = cloud.size();
    GramTensor t(2, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            t(i, j) = cloud[i] * std::conj(cloud[j]);
    return t;
}

double angular_error(Complex pred, const Rotation& truth) { return std::abs(pred - truth.value()); }

double angle_threshold(double degrees) { return 2.0 * std::sin(degrees * std::numbers::pi / 360.0); }

std::vector<Permutation> enumerate_stab0(std::size_t m)
{
    if (m == 0 || m > kMaxEnumerationSize)
        throw std::invalid_argument("enumerate_stab0 supports 1 <= m <= 7");
    std::vector<std::size_t> map(m);
    std::iota(map.begin(), map.end(), std::size_t{0});
    std::vector<Permutation> out;
    do {
        out.emplace_back(map);
    } while (std::next_permutation(map.begin() + 1, map.end()));
    return out;
}

std::vector<Permutation> enumerate_sm(std::size_t m)
{
    if (m == 0 || m > kMaxEnumerationSize)
        throw std::invalid_argument("enumerate_sm supports 1 <= m <= 7");
    std::vector<std::size_t> map(m);
    std::iota(map.begin(), map.end(), std::size_t{0});
    std::vector<Permutation> out;
    do {
        out.emplace_back(map);
    } while (std::next_permutation(map.begin(), map.end()));
    return out;
}

}  // namespace zz
