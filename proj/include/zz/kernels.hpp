#pragma once

#include <complex>
#include <cstddef>

// Inner loops of the layer engine. Every kernel has a scalar reference
// implementation; wider variants are selected at runtime and must agree with
// the reference up to floating-point reassociation.

namespace zz::kernels {

using Complex = std::complex<double>;

enum class Isa { Scalar, Avx2 };

struct Table {
    /// y[k] += a*x[k] + b*conj(x[k])
    void (*rl_axpy)(std::size_t n, Complex a, Complex b, const Complex* x, Complex* y);
    /// *cx = sum conj(x[k])*g[k], *xg = sum x[k]*g[k]
    void (*rl_dot)(std::size_t n, const Complex* x, const Complex* g, Complex* cx, Complex* xg);
    /// Leaky ReLU over n reals.
    void (*leaky_forward)(std::size_t n, double slope, const double* x, double* y);
    /// gx[k] += gy[k] * f'(x[k]); f'(0) = 0.
    void (*leaky_backward)(std::size_t n, double slope, const double* x, const double* gy, double* gx);
    /// out[i*m + j] = z[i] * conj(z[j])
    void (*outer_conj)(std::size_t m, const Complex* z, Complex* out);
    Complex (*sum)(std::size_t n, const Complex* x);
};

bool supported(Isa isa);
const char* name(Isa isa);

/// Kernel table for a specific ISA; throws if the CPU does not support it.
const Table& table(Isa isa);
/// Currently selected table. Defaults to the widest supported ISA unless the
/// ZZ_ISA environment variable is set to "scalar".
const Table& active();
Isa active_isa();
void set_active_isa(Isa isa);

namespace scalar {
const Table& table();
}
namespace avx2 {
const Table& table();
}

}  // namespace zz::kernels
