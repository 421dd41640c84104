#include "zz/kernels.hpp"

#include <immintrin.h>

// Built with -mavx2 -mfma; only reached after a runtime CPU check.

namespace zz::kernels::avx2 {

namespace {

// Two complex doubles per register: [re0, im0, re1, im1].
inline __m256d swap_pairs(__m256d v) { return _mm256_permute_pd(v, 0b0101); }

inline Complex hsum_pairs(__m256d v)
{
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return {t[0] + t[2], t[1] + t[3]};
}

void rl_axpy(std::size_t n, Complex a, Complex b, const Complex* x, Complex* y)
{
    const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
    const __m256d p = _mm256_setr_pd(ar + br, ar - br, ar + br, ar - br);
    const __m256d q = _mm256_setr_pd(bi - ai, ai + bi, bi - ai, ai + bi);
    const double* xd = reinterpret_cast<const double*>(x);
    double* yd = reinterpret_cast<double*>(y);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const __m256d xv = _mm256_loadu_pd(xd + 2 * k);
        __m256d yv = _mm256_loadu_pd(yd + 2 * k);
        yv = _mm256_fmadd_pd(p, xv, yv);
        yv = _mm256_fmadd_pd(q, swap_pairs(xv), yv);
        _mm256_storeu_pd(yd + 2 * k, yv);
    }
    for (; k < n; ++k)
        y[k] += a * x[k] + b * std::conj(x[k]);
}

void rl_dot(std::size_t n, const Complex* x, const Complex* g, Complex* cx, Complex* xg)
{
    const double* xd = reinterpret_cast<const double*>(x);
    const double* gd = reinterpret_cast<const double*>(g);
    __m256d straight = _mm256_setzero_pd();  // [xr*gr, xi*gi]
    __m256d crossed = _mm256_setzero_pd();   // [xr*gi, xi*gr]
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const __m256d xv = _mm256_loadu_pd(xd + 2 * k);
        const __m256d gv = _mm256_loadu_pd(gd + 2 * k);
        straight = _mm256_fmadd_pd(xv, gv, straight);
        crossed = _mm256_fmadd_pd(xv, swap_pairs(gv), crossed);
    }
    const Complex s = hsum_pairs(straight);
    const Complex c = hsum_pairs(crossed);
    Complex s1{s.real() + s.imag(), c.real() - c.imag()};
    Complex s2{s.real() - s.imag(), c.real() + c.imag()};
    for (; k < n; ++k) {
        s1 += std::conj(x[k]) * g[k];
        s2 += x[k] * g[k];
    }
    *cx = s1;
    *xg = s2;
}

void leaky_forward(std::size_t n, double slope, const double* x, double* y)
{
    const __m256d zero = _mm256_setzero_pd();
    const __m256d sv = _mm256_set1_pd(slope);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xv = _mm256_loadu_pd(x + k);
        const __m256d pos = _mm256_max_pd(zero, xv);
        const __m256d neg = _mm256_min_pd(zero, xv);
        _mm256_storeu_pd(y + k, _mm256_fmadd_pd(sv, neg, pos));
    }
    for (; k < n; ++k)
        y[k] = x[k] >= 0.0 ? x[k] : slope * x[k];
}

void leaky_backward(std::size_t n, double slope, const double* x, const double* gy, double* gx)
{
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d sv = _mm256_set1_pd(slope);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d xv = _mm256_loadu_pd(x + k);
        const __m256d gt = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        const __m256d lt = _mm256_cmp_pd(xv, zero, _CMP_LT_OQ);
        const __m256d d = _mm256_or_pd(_mm256_and_pd(gt, one), _mm256_and_pd(lt, sv));
        const __m256d acc = _mm256_loadu_pd(gx + k);
        _mm256_storeu_pd(gx + k, _mm256_fmadd_pd(_mm256_loadu_pd(gy + k), d, acc));
    }
    for (; k < n; ++k) {
        if (x[k] > 0.0)
            gx[k] += gy[k];
        else if (x[k] < 0.0)
            gx[k] += slope * gy[k];
    }
}

void outer_conj(std::size_t m, const Complex* z, Complex* out)
{
    const double* zd = reinterpret_cast<const double*>(z);
    for (std::size_t i = 0; i < m; ++i) {
        const double zr = z[i].real(), zi = z[i].imag();
        const __m256d a = _mm256_setr_pd(zr, -zr, zr, -zr);
        const __m256d b = _mm256_set1_pd(zi);
        double* row = reinterpret_cast<double*>(out + i * m);
        std::size_t j = 0;
        for (; j + 2 <= m; j += 2) {
            const __m256d w = _mm256_loadu_pd(zd + 2 * j);
            _mm256_storeu_pd(row + 2 * j, _mm256_fmadd_pd(b, swap_pairs(w), _mm256_mul_pd(a, w)));
        }
        for (; j < m; ++j)
            out[i * m + j] = z[i] * std::conj(z[j]);
    }
}

Complex sum(std::size_t n, const Complex* x)
{
    const double* xd = reinterpret_cast<const double*>(x);
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(xd + 2 * k));
    Complex s = hsum_pairs(acc);
    for (; k < n; ++k)
        s += x[k];
    return s;
}

}  // namespace

const Table& table()
{
    static const Table t{rl_axpy, rl_dot, leaky_forward, leaky_backward, outer_conj, sum};
    return t;
}

}  // namespace zz::kernels::avx2
