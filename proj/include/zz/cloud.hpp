#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace zz {

using Complex = std::complex<double>;

/// A 2D point cloud stored as a vector of complex numbers z_0 .. z_{m-1}.
class PointCloud {
public:
    PointCloud() = default;
    explicit PointCloud(std::vector<Complex> points);

    std::size_t size() const { return points_.size(); }
    const Complex& operator[](std::size_t i) const { return points_[i]; }
    std::span<const Complex> points() const { return points_; }

    bool operator==(const PointCloud&) const = default;

private:
    std::vector<Complex> points_;
};

/// Two clouds whose i-th points correspond to each other.
struct CloudPair {
    PointCloud z;
    PointCloud x;

    CloudPair() = default;
    CloudPair(PointCloud z_, PointCloud x_);
};

/// A unit complex number acting on clouds by multiplication.
class Rotation {
public:
    Rotation() = default;
    /// Normalizes `v`; throws if |v| < 1e-12.
    explicit Rotation(Complex v);
    static Rotation from_angle(double radians);

    const Complex& value() const { return value_; }
    Rotation operator*(const Rotation& o) const { return Rotation(value_ * o.value_); }
    Rotation inverse() const { return Rotation(std::conj(value_)); }

private:
    Complex value_{1.0, 0.0};
};

/// A bijection of [m], stored forward (i -> pi(i)) with its inverse.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::size_t> mapping);
    static Permutation identity(std::size_t m);

    std::size_t size() const { return forward_.size(); }
    std::size_t operator()(std::size_t i) const { return forward_[i]; }
    std::size_t inverse(std::size_t i) const { return inverse_[i]; }
    std::span<const std::size_t> mapping() const { return forward_; }

    /// (this ∘ other)(i) = this(other(i)).
    Permutation compose(const Permutation& other) const;
    Permutation inverted() const;

    bool operator==(const Permutation& o) const { return forward_ == o.forward_; }

private:
    std::vector<std::size_t> forward_;
    std::vector<std::size_t> inverse_;
};

/// Dense complex tensor of order 0..3 with side m, row-major.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t order, std::size_t m);

    std::size_t order() const { return order_; }
    std::size_t side() const { return m_; }
    std::size_t numel() const { return data_.size(); }

    Complex& operator()() { return data_[0]; }
    Complex& operator()(std::size_t i) { return data_[i]; }
    Complex& operator()(std::size_t i, std::size_t j) { return data_[i * m_ + j]; }
    Complex& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * m_ + j) * m_ + k]; }
    const Complex& operator()() const { return data_[0]; }
    const Complex& operator()(std::size_t i) const { return data_[i]; }
    const Complex& operator()(std::size_t i, std::size_t j) const { return data_[i * m_ + j]; }
    const Complex& operator()(std::size_t i, std::size_t j, std::size_t k) const
    {
        return data_[(i * m_ + j) * m_ + k];
    }

    std::span<Complex> data() { return data_; }
    std::span<const Complex> data() const { return data_; }

    Tensor& operator+=(const Tensor& o);
    Tensor& operator*=(Complex s);

private:
    std::size_t order_ = 0;
    std::size_t m_ = 0;
    std::vector<Complex> data_;
};

Tensor operator-(const Tensor& a, const Tensor& b);
/// Largest entrywise modulus.
double max_abs(const Tensor& t);

/// Gram tensor entries[i][j] = z_i * conj(z_j).
using GramTensor = Tensor;

PointCloud rotate(const PointCloud& cloud, const Rotation& theta);
PointCloud permute(const PointCloud& cloud, const Permutation& pi);
/// [pi*T]_{i..} = T_{pi^-1(i)..}, any order.
Tensor permute_tensor(const Tensor& t, const Permutation& pi);
/// Transposition of 0 and i in S_m.
Permutation tau(std::size_t i, std::size_t m);
GramTensor gram(const PointCloud& cloud);

/// |pred - truth|.
double angular_error(Complex pred, const Rotation& truth);
/// Distance between two unit complex numbers `degrees` apart: 2 sin(a*pi/360).
double angle_threshold(double degrees);

/// All (m-1)! permutations with pi(0) = 0, lexicographic in the tail.
std::vector<Permutation> enumerate_stab0(std::size_t m);
/// All m! permutations, lexicographic.
std::vector<Permutation> enumerate_sm(std::size_t m);

}  // namespace zz
