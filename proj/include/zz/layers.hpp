#pragma once

#include "zz/params.hpp"
#include "zz/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace zz {

/// Real-linear scalar action w(z) = a*z + b*conj(z).
struct RealLinearCoeff {
    Complex a;
    Complex b;

    Complex operator()(Complex z) const { return a * z + b * std::conj(z); }
};

/// Complex-linear scalar action w(z) = c*z.
struct ComplexLinearCoeff {
    Complex c;
};

/// How summed indices inside basis maps and invarizations are normalized.
enum class Pooling { Mean, Sum };

const char* pooling_name(Pooling p);
Pooling parse_pooling(const std::string& s);

enum class LayerKind {
    Stab0First,        // L0(2,1) on the Gram tensor, fused from the cloud; bias over {e0, 1}
    Stab0Vector,       // L0(1,1); bias over {e0, 1}
    Dense,             // multiscalar to multiscalar; one complex bias
    SmTensor,          // S_m L(2,2); bias over {1⊗1, diag*(1)}
    SmVector,          // S_m L(1,1); bias over {1}
    ComplexPointwise,  // c*z per point, no bias
    ComplexSm,         // c0*v + c1*mean(v)*1, no bias
};

const char* layer_kind_name(LayerKind k);

/// Shape and parameter placement of one linear layer.
///
/// Real-linear layers store (a.re, a.im, b.re, b.im) per (out, in, basis)
/// triple followed by the same per (out, bias basis) pair. Complex layers
/// store (c.re, c.im) per (out, in, basis).
struct LinearLayer {
    LayerKind kind = LayerKind::Dense;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t coeff_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t basis_size() const;
    std::size_t bias_basis_size() const;
    bool complex_linear() const;
    std::size_t coeff_reals() const;
    std::size_t bias_reals() const;

    std::size_t coeff_index(std::size_t o, std::size_t i, std::size_t k) const;
    std::size_t bias_index(std::size_t o, std::size_t j) const;
};

/// Registers coefficient and bias blocks for a layer under `name`.
LinearLayer register_layer(ParamStore& store, const std::string& name, LayerKind kind, std::size_t in,
                           std::size_t out);

/// A layer together with its own parameter vector, for direct use outside a model.
struct LayerWeights {
    LinearLayer layer;
    std::vector<double> params;

    static LayerWeights zeros(LayerKind kind, std::size_t in, std::size_t out);

    RealLinearCoeff coeff(std::size_t o, std::size_t i, std::size_t k) const;
    void set_coeff(std::size_t o, std::size_t i, std::size_t k, RealLinearCoeff c);
    RealLinearCoeff bias(std::size_t o, std::size_t j) const;
    void set_bias(std::size_t o, std::size_t j, RealLinearCoeff c);
    ComplexLinearCoeff complex_coeff(std::size_t o, std::size_t i, std::size_t k) const;
    void set_complex_coeff(std::size_t o, std::size_t i, std::size_t k, ComplexLinearCoeff c);

    ParamBinding binding() const { return ParamBinding{params.data(), nullptr}; }
};

using Stab0LayerWeights = LayerWeights;
using SmLayerWeights = LayerWeights;

// ---------------------------------------------------------------------------
// Value-level operations.

/// ReLU(|z| - eta) z / |z|, and 0 at z = 0.
Complex complex_relu(Complex z, double eta);
/// Leaky ReLU applied to the real and imaginary parts independently.
Complex leaky_activation(Complex z, double slope);

/// Stab(0) layer. Stab0First takes a cloud multivector (one channel per cloud),
/// Stab0Vector a multivector.
MultiVector apply_stab0_layer(const MultiVector& input, const Stab0LayerWeights& w, Pooling pool = Pooling::Sum);
/// S_m layer. SmTensor takes a multitensor (length m*m), SmVector a multivector.
Features apply_sm_layer(const Features& input, const SmLayerWeights& w, Pooling pool = Pooling::Sum);
/// ComplexPointwise or ComplexSm layer; ComplexSm always uses the mean.
MultiVector apply_complex_linear(const MultiVector& input, const LayerWeights& w);
/// Divides each channel by max(||channel||_2, 1e-12).
MultiVector l2_normalize_channels(const MultiVector& v);

// ---------------------------------------------------------------------------
// Recorded operations. Each returns a new node; gradients flow to inputs that
// need them and, when `p.differentiating()`, to the parameters.

namespace op {

/// Records, while installed on the current thread, the smallest distance of
/// any activation input to a kink (leaky: re or im = 0; complex ReLU:
/// |z| = eta or z = 0) and a hash of which side of each kink every input lies.
struct KinkMonitor {
    double min_margin = 1e300;
    std::uint64_t pattern = 1469598103934665603ull;

    void note(double margin, bool side)
    {
        if (margin < min_margin)
            min_margin = margin;
        pattern = (pattern ^ (side ? 0x9Bu : 0x3Cu)) * 1099511628211ull;
    }
};

/// Installs `m` for the current thread (nullptr removes it).
void set_kink_monitor(KinkMonitor* m);

/// Per-channel Gram tensors z_i conj(z_j); length m -> m*m.
Var gram(Tape& t, Var cloud);
/// The fifteen L0(2,1) features of each channel's Gram tensor, computed from
/// the cloud; channel c*15 + k holds K_k of input channel c.
Var fused_first(Tape& t, Var cloud, Pooling pool);
/// The five L0(1,1) features of each channel; channel c*5 + k.
Var stab0_vector_basis(Tape& t, Var v, Pooling pool);
/// The two S_m L(1,1) features of each channel (identity, pooled sum).
Var sm_vector_basis(Tape& t, Var v, Pooling pool);
/// Real-linear mixing of basis features: `features` has layer.in * basis
/// channels, ordered (in, basis).
Var mix(Tape& t, Var features, const LinearLayer& layer, const ParamBinding& p);
/// S_m L(2,2) layer on a multitensor without materializing the basis.
Var sm_tensor(Tape& t, Var tensor, const LinearLayer& layer, const ParamBinding& p, Pooling pool);
/// ComplexPointwise / ComplexSm layer.
Var complex_mix(Tape& t, Var v, const LinearLayer& layer, const ParamBinding& p);

Var leaky(Tape& t, Var x, double slope);
/// Complex ReLU with one threshold per channel at p.values[eta_offset + c].
Var complex_relu(Tape& t, Var x, std::size_t eta_offset, const ParamBinding& p);
Var l2_normalize(Tape& t, Var v);
/// m*m -> m: V_i = sum_j T_ij (divided by m under mean pooling).
Var row_pool(Tape& t, Var tensor, Pooling pool);
/// length n -> 1 per channel: sum (or mean) over entries.
Var point_pool(Tape& t, Var v, Pooling pool);
/// Elementwise product of equally shaped nodes.
Var multiply(Tape& t, Var a, Var b);
/// Channel concatenation of equal-length nodes.
Var concat(Tape& t, std::span<const Var> parts);
/// Gathers channel 0 entry 0 of each scalar node into one channel.
Var stack_scalars(Tape& t, std::span<const Var> scalars);
/// [pi* v]_i = v_{pi^-1(i)} on every channel.
Var permute_points(Tape& t, Var v, const Permutation& pi);
/// F_xz * conj(F_zx) for single-entry nodes.
Var rotation_head(Tape& t, Var f_zx, Var f_xz);
/// |pred - truth|^2 as a real scalar node.
Var squared_error(Tape& t, Var pred, Complex truth);

}  // namespace op

}  // namespace zz
