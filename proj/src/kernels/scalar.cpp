#include "zz/kernels.hpp"

namespace zz::kernels::scalar {

namespace {

void rl_axpy(std::size_t n, Complex a, Complex b, const Complex* x, Complex* y)
{
    for (std::size_t k = 0; k < n; ++k)
        y[k] += a * x[k] + b * std::conj(x[k]);
}

void rl_dot(std::size_t n, const Complex* x, const Complex* g, Complex* cx, Complex* xg)
{
    Complex s1{}, s2{};
    for (std::size_t k = 0; k < n; ++k) {
        s1 += std::conj(x[k]) * g[k];
        s2 += x[k] * g[k];
    }
    *cx = s1;
    *xg = s2;
}

void leaky_forward(std::size_t n, double slope, const double* x, double* y)
{
    for (std::size_t k = 0; k < n; ++k)
        y[k] = x[k] >= 0.0 ? x[k] : slope * x[k];
}

void leaky_backward(std::size_t n, double slope, const double* x, const double* gy, double* gx)
{
    for (std::size_t k = 0; k < n; ++k) {
        if (x[k] > 0.0)
            gx[k] += gy[k];
        else if (x[k] < 0.0)
            gx[k] += slope * gy[k];
    }
}

void outer_conj(std::size_t m, const Complex* z, Complex* out)
{
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out[i * m + j] = z[i] * std::conj(z[j]);
}

Complex sum(std::size_t n, const Complex* x)
{
    Complex s{};
    for (std::size_t k = 0; k < n; ++k)
        s += x[k];
    return s;
}

}  // namespace

const Table& table()
{
    static const Table t{rl_axpy, rl_dot, leaky_forward, leaky_backward, outer_conj, sum};
    return t;
}

}  // namespace zz::kernels::scalar
