#include "zz/layers.hpp"

#include "zz/bases.hpp"
#include "zz/kernels.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace zz {

const char* pooling_name(Pooling p) { return p == Pooling::Mean ? "mean" : "sum"; }

Pooling parse_pooling(const std::string& s)
{
    if (s == "mean")
        return Pooling::Mean;
    if (s == "sum")
        return Pooling::Sum;
    throw std::invalid_argument("unknown pooling '" + s + "'");
}

const char* layer_kind_name(LayerKind k)
{
    switch (k) {
    case LayerKind::Stab0First: return "stab0-first";
    case LayerKind::Stab0Vector: return "stab0-vector";
    case LayerKind::Dense: return "dense";
    case LayerKind::SmTensor: return "sm-tensor";
    case LayerKind::SmVector: return "sm-vector";
    case LayerKind::ComplexPointwise: return "complex-pointwise";
    case LayerKind::ComplexSm: return "complex-sm";
    }
    return "?";
}

std::size_t LinearLayer::basis_size() const
{
    switch (kind) {
    case LayerKind::Stab0First: return 15;
    case LayerKind::Stab0Vector: return 5;
    case LayerKind::Dense: return 1;
    case LayerKind::SmTensor: return 15;
    case LayerKind::SmVector: return 2;
    case LayerKind::ComplexPointwise: return 1;
    case LayerKind::ComplexSm: return 2;
    }
    return 0;
}

std::size_t LinearLayer::bias_basis_size() const
{
    switch (kind) {
    case LayerKind::Stab0First:
    case LayerKind::Stab0Vector:
    case LayerKind::SmTensor: return 2;
    case LayerKind::Dense:
    case LayerKind::SmVector: return 1;
    default: return 0;
    }
}

bool LinearLayer::complex_linear() const
{
    return kind == LayerKind::ComplexPointwise || kind == LayerKind::ComplexSm;
}

std::size_t LinearLayer::coeff_reals() const { return out * in * basis_size() * (complex_linear() ? 2 : 4); }

std::size_t LinearLayer::bias_reals() const { return out * bias_basis_size() * 4; }

std::size_t LinearLayer::coeff_index(std::size_t o, std::size_t i, std::size_t k) const
{
    return coeff_offset + ((o * in + i) * basis_size() + k) * (complex_linear() ? 2 : 4);
}

std::size_t LinearLayer::bias_index(std::size_t o, std::size_t j) const
{
    return bias_offset + (o * bias_basis_size() + j) * 4;
}

LinearLayer register_layer(ParamStore& store, const std::string& name, LayerKind kind, std::size_t in,
                           std::size_t out)
{
    if (in == 0 || out == 0)
        throw std::invalid_argument("layer '" + name + "' needs nonzero channel counts");
    LinearLayer l{kind, in, out, 0, 0};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in * l.basis_size()));
    l.coeff_offset = store.add(name + ".coeff", l.complex_linear() ? ParamRole::ComplexCoeff : ParamRole::Coeff,
                               l.coeff_reals(), scale);
    l.bias_offset = l.bias_reals() ? store.add(name + ".bias", ParamRole::Bias, l.bias_reals()) : store.size();
    return l;
}

LayerWeights LayerWeights::zeros(LayerKind kind, std::size_t in, std::size_t out)
{
    LayerWeights w;
    w.layer = LinearLayer{kind, in, out, 0, 0};
    w.layer.bias_offset = w.layer.coeff_reals();
    w.params.assign(w.layer.coeff_reals() + w.layer.bias_reals(), 0.0);
    return w;
}

namespace {

RealLinearCoeff read_rl(const double* p) { return {{p[0], p[1]}, {p[2], p[3]}}; }

void write_rl(double* p, RealLinearCoeff c)
{
    p[0] = c.a.real();
    p[1] = c.a.imag();
    p[2] = c.b.real();
    p[3] = c.b.imag();
}

}  // namespace

RealLinearCoeff LayerWeights::coeff(std::size_t o, std::size_t i, std::size_t k) const
{
    return read_rl(params.data() + layer.coeff_index(o, i, k));
}

void LayerWeights::set_coeff(std::size_t o, std::size_t i, std::size_t k, RealLinearCoeff c)
{
    write_rl(params.data() + layer.coeff_index(o, i, k), c);
}

RealLinearCoeff LayerWeights::bias(std::size_t o, std::size_t j) const
{
    return read_rl(params.data() + layer.bias_index(o, j));
}

void LayerWeights::set_bias(std::size_t o, std::size_t j, RealLinearCoeff c)
{
    write_rl(params.data() + layer.bias_index(o, j), c);
}

ComplexLinearCoeff LayerWeights::complex_coeff(std::size_t o, std::size_t i, std::size_t k) const
{
    const double* p = params.data() + layer.coeff_index(o, i, k);
    return {{p[0], p[1]}};
}

void LayerWeights::set_complex_coeff(std::size_t o, std::size_t i, std::size_t k, ComplexLinearCoeff c)
{
    double* p = params.data() + layer.coeff_index(o, i, k);
    p[0] = c.c.real();
    p[1] = c.c.imag();
}

// ---------------------------------------------------------------------------

Complex complex_relu(Complex z, double eta)
{
    const double r = std::abs(z);
    if (r <= eta || r == 0.0)
        return {};
    return z * ((r - eta) / r);
}

Complex leaky_activation(Complex z, double slope)
{
    auto f = [slope](double x) { return x >= 0.0 ? x : slope * x; };
    return {f(z.real()), f(z.imag())};
}

MultiVector apply_stab0_layer(const MultiVector& input, const Stab0LayerWeights& w, Pooling pool)
{
    Tape t;
    const Var x = t.leaf(input);
    Var f;
    if (w.layer.kind == LayerKind::Stab0First)
        f = op::fused_first(t, x, pool);
    else if (w.layer.kind == LayerKind::Stab0Vector)
        f = op::stab0_vector_basis(t, x, pool);
    else
        throw std::invalid_argument("apply_stab0_layer: not a Stab(0) layer");
    return t.value(op::mix(t, f, w.layer, w.binding()));
}

Features apply_sm_layer(const Features& input, const SmLayerWeights& w, Pooling pool)
{
    Tape t;
    const Var x = t.leaf(input);
    if (w.layer.kind == LayerKind::SmTensor)
        return t.value(op::sm_tensor(t, x, w.layer, w.binding(), pool));
    if (w.layer.kind == LayerKind::SmVector)
        return t.value(op::mix(t, op::sm_vector_basis(t, x, pool), w.layer, w.binding()));
    throw std::invalid_argument("apply_sm_layer: not an S_m layer");
}

MultiVector apply_complex_linear(const MultiVector& input, const LayerWeights& w)
{
    Tape t;
    return t.value(op::complex_mix(t, t.leaf(input), w.layer, w.binding()));
}

MultiVector l2_normalize_channels(const MultiVector& v)
{
    Tape t;
    return t.value(op::l2_normalize(t, t.leaf(v)));
}

// ---------------------------------------------------------------------------

namespace op {

namespace {

constexpr double kNormFloor = 1e-12;

thread_local KinkMonitor* tl_monitor = nullptr;

double pool_scale(Pooling pool, int summed, std::size_t m)
{
    return pool == Pooling::Mean ? std::pow(static_cast<double>(m), -summed) : 1.0;
}

std::size_t side_of(std::size_t length)
{
    const auto m = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(length))));
    if (m * m != length)
        throw std::invalid_argument("tensor node length is not a square");
    return m;
}

void add_param_grad(const ParamBinding& p, std::size_t offset, Complex g)
{
    p.add_complex_grad(offset, g);
}

void add_rl_grad(const ParamBinding& p, std::size_t offset, Complex ga, Complex gb)
{
    p.add_complex_grad(offset, ga);
    p.add_complex_grad(offset + 2, gb);
}

}  // namespace

void set_kink_monitor(KinkMonitor* m) { tl_monitor = m; }

Var gram(Tape& t, Var cloud)
{
    const Features& z = t.value(cloud);
    const std::size_t m = z.length;
    Features out(z.channels, m * m);
    const auto& k = kernels::active();
    for (std::size_t c = 0; c < z.channels; ++c)
        k.outer_conj(m, z.channel(c).data(), out.channel(c).data());
    return t.push(std::move(out), t.needs_grad(cloud), [cloud, m](Tape& tp, std::size_t self) {
        const Features& z = tp.value(cloud);
        const auto g = tp.grad(Var{self});
        auto gz = tp.grad_buffer(cloud.id);
        for (std::size_t c = 0; c < z.channels; ++c) {
            const Complex* zc = z.channel(c).data();
            const Complex* G = g.data() + c * m * m;
            Complex* out = gz.data() + c * m;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j) {
                    out[i] += zc[j] * G[i * m + j];
                    out[j] += zc[i] * std::conj(G[i * m + j]);
                }
        }
    });
}

Var fused_first(Tape& t, Var cloud, Pooling pool)
{
    const Features& z = t.value(cloud);
    const std::size_t m = z.length;
    std::array<double, 15> scale{};
    for (std::size_t k = 0; k < 15; ++k)
        scale[k] = pool_scale(pool, kStab0FirstSummedIndices[k], m);

    Features out(z.channels * 15, m);
    for (std::size_t c = 0; c < z.channels; ++c) {
        const auto feats = fused_first_layer(PointCloud(std::vector<Complex>(z.channel(c).begin(), z.channel(c).end())));
        for (std::size_t k = 0; k < 15; ++k) {
            auto dst = out.channel(c * 15 + k);
            for (std::size_t p = 0; p < m; ++p)
                dst[p] = scale[k] * feats[k][p];
        }
    }
    return t.push(std::move(out), t.needs_grad(cloud), [cloud, m, scale](Tape& tp, std::size_t self) {
        const Features& z = tp.value(cloud);
        const auto g = tp.grad(Var{self});
        auto gz_all = tp.grad_buffer(cloud.id);
        for (std::size_t c = 0; c < z.channels; ++c) {
            const Complex* zc = z.channel(c).data();
            Complex* gz = gz_all.data() + c * m;
            auto G = [&](std::size_t k, std::size_t p) { return scale[k] * g[(c * 15 + k) * m + p]; };

            Complex s{};
            for (std::size_t p = 0; p < m; ++p)
                s += zc[p];
            const Complex z0 = zc[0];

            std::array<Complex, 5> glam{};
            for (std::size_t k = 0; k < 5; ++k) {
                glam[k] = G(k, 0);
                for (std::size_t p = 0; p < m; ++p)
                    glam[k] += G(5 + k, p);
            }

            Complex gs = 2.0 * s * glam[0].real();
            Complex gz0 = 2.0 * z0 * glam[2].real();
            gz0 += s * glam[3];
            gs += z0 * std::conj(glam[3]);
            gs += z0 * glam[4];
            gz0 += s * std::conj(glam[4]);

            for (std::size_t p = 0; p < m; ++p) {
                const Complex zp = zc[p];
                Complex acc = 2.0 * zp * glam[1].real();
                const Complex g10 = G(10, p), g11 = G(11, p), g12 = G(12, p), g13 = G(13, p), g14 = G(14, p);
                acc += z0 * g10;
                gz0 += zp * std::conj(g10);
                gz0 += zp * g11;
                acc += z0 * std::conj(g11);
                acc += s * g12;
                gs += zp * std::conj(g12);
                gs += zp * g13;
                acc += s * std::conj(g13);
                acc += 2.0 * zp * g14.real();
                gz[p] += acc;
            }
            gz[0] += gz0;
            for (std::size_t p = 0; p < m; ++p)
                gz[p] += gs;
        }
    });
}

Var stab0_vector_basis(Tape& t, Var v, Pooling pool)
{
    const Features& x = t.value(v);
    const std::size_t m = x.length;
    const double s0 = pool_scale(pool, kStab0VectorSummedIndices[0], m);
    const double s3 = pool_scale(pool, kStab0VectorSummedIndices[3], m);
    Features out(x.channels * 5, m);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const auto in = x.channel(c);
        Complex total{};
        for (auto e : in)
            total += e;
        for (std::size_t p = 0; p < m; ++p) {
            out.at(c * 5 + 0, p) = s0 * total;
            out.at(c * 5 + 1, p) = in[p];
            out.at(c * 5 + 4, p) = in[0];
        }
        out.at(c * 5 + 2, 0) = in[0];
        out.at(c * 5 + 3, 0) = s3 * total;
    }
    return t.push(std::move(out), t.needs_grad(v), [v, m, s0, s3](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gv = tp.grad_buffer(v.id);
        const std::size_t channels = tp.channels(v);
        for (std::size_t c = 0; c < channels; ++c) {
            auto G = [&](std::size_t k, std::size_t p) { return g[(c * 5 + k) * m + p]; };
            Complex gsum = s3 * G(3, 0);
            Complex g0 = G(2, 0);
            for (std::size_t p = 0; p < m; ++p) {
                gsum += s0 * G(0, p);
                g0 += G(4, p);
                gv[c * m + p] += G(1, p);
            }
            gv[c * m] += g0;
            for (std::size_t p = 0; p < m; ++p)
                gv[c * m + p] += gsum;
        }
    });
}

Var sm_vector_basis(Tape& t, Var v, Pooling pool)
{
    const Features& x = t.value(v);
    const std::size_t m = x.length;
    const double s = pool_scale(pool, 1, m);
    Features out(x.channels * 2, m);
    for (std::size_t c = 0; c < x.channels; ++c) {
        const auto in = x.channel(c);
        Complex total{};
        for (auto e : in)
            total += e;
        for (std::size_t p = 0; p < m; ++p) {
            out.at(c * 2, p) = in[p];
            out.at(c * 2 + 1, p) = s * total;
        }
    }
    return t.push(std::move(out), t.needs_grad(v), [v, m, s](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gv = tp.grad_buffer(v.id);
        const std::size_t channels = tp.channels(v);
        for (std::size_t c = 0; c < channels; ++c) {
            Complex gsum{};
            for (std::size_t p = 0; p < m; ++p) {
                gv[c * m + p] += g[(c * 2) * m + p];
                gsum += g[(c * 2 + 1) * m + p];
            }
            for (std::size_t p = 0; p < m; ++p)
                gv[c * m + p] += s * gsum;
        }
    });
}

Var mix(Tape& t, Var features, const LinearLayer& layer, const ParamBinding& p)
{
    if (layer.complex_linear() || layer.kind == LayerKind::SmTensor)
        throw std::invalid_argument("mix: unsupported layer kind");
    const Features& f = t.value(features);
    const std::size_t K = layer.basis_size();
    if (f.channels != layer.in * K)
        throw std::invalid_argument("mix: expected " + std::to_string(layer.in * K) + " feature channels, got " +
                                    std::to_string(f.channels));
    const std::size_t n = f.length;
    const bool e0_bias = layer.kind == LayerKind::Stab0First || layer.kind == LayerKind::Stab0Vector;
    const auto& kern = kernels::active();

    Features out(layer.out, n);
    for (std::size_t o = 0; o < layer.out; ++o) {
        Complex* y = out.channel(o).data();
        for (std::size_t i = 0; i < layer.in; ++i)
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t at = layer.coeff_index(o, i, k);
                kern.rl_axpy(n, p.complex_at(at), p.complex_at(at + 2), f.channel(i * K + k).data(), y);
            }
        for (std::size_t j = 0; j < layer.bias_basis_size(); ++j) {
            const std::size_t at = layer.bias_index(o, j);
            const Complex b = p.complex_at(at) + p.complex_at(at + 2);
            if (e0_bias && j == 0)
                y[0] += b;
            else
                for (std::size_t q = 0; q < n; ++q)
                    y[q] += b;
        }
    }
    const bool input_grad = t.needs_grad(features);
    return t.push(std::move(out), input_grad || p.differentiating(),
                  [features, layer, p, K, n, e0_bias, input_grad](Tape& tp, std::size_t self) {
                      const auto& kern = kernels::active();
                      const Features& f = tp.value(features);
                      const auto g = tp.grad(Var{self});
                      std::span<Complex> gf;
                      if (input_grad)
                          gf = tp.grad_buffer(features.id);
                      for (std::size_t o = 0; o < layer.out; ++o) {
                          const Complex* G = g.data() + o * n;
                          for (std::size_t i = 0; i < layer.in; ++i)
                              for (std::size_t k = 0; k < K; ++k) {
                                  const std::size_t at = layer.coeff_index(o, i, k);
                                  const Complex* x = f.channel(i * K + k).data();
                                  if (input_grad)
                                      kern.rl_axpy(n, std::conj(p.complex_at(at)), p.complex_at(at + 2), G,
                                                   gf.data() + (i * K + k) * n);
                                  if (p.differentiating()) {
                                      Complex cx, xg;
                                      kern.rl_dot(n, x, G, &cx, &xg);
                                      add_rl_grad(p, at, cx, xg);
                                  }
                              }
                          if (p.differentiating())
                              for (std::size_t j = 0; j < layer.bias_basis_size(); ++j) {
                                  const Complex sum = (e0_bias && j == 0) ? G[0] : kern.sum(n, G);
                                  add_rl_grad(p, layer.bias_index(o, j), sum, sum);
                              }
                      }
                  });
}

namespace {

// Which statistic of an input channel a small S_m L(2,2) term reads, and
// where its output lands.
enum class Stat { Row, Col, Diag, Total, Trace };
enum class Target { Row, Col, Diag, Const };

struct SmTerm {
    std::size_t basis;
    Stat stat;
    Target target;
};

constexpr std::array<SmTerm, 13> kSmTerms = {{
    {2, Stat::Diag, Target::Diag},
    {3, Stat::Row, Target::Row},
    {4, Stat::Row, Target::Col},
    {5, Stat::Col, Target::Row},
    {6, Stat::Col, Target::Col},
    {7, Stat::Diag, Target::Row},
    {8, Stat::Diag, Target::Col},
    {9, Stat::Row, Target::Diag},
    {10, Stat::Col, Target::Diag},
    {11, Stat::Total, Target::Const},
    {12, Stat::Total, Target::Diag},
    {13, Stat::Trace, Target::Const},
    {14, Stat::Trace, Target::Diag},
}};

struct ChannelStats {
    std::vector<Complex> row, col, diag;
    Complex total, trace;

    ChannelStats(std::size_t m) : row(m), col(m), diag(m) { }

    bool vector_stat(Stat s) const { return s == Stat::Row || s == Stat::Col || s == Stat::Diag; }
    std::vector<Complex>& vec(Stat s) { return s == Stat::Row ? row : s == Stat::Col ? col : diag; }
    const std::vector<Complex>& vec(Stat s) const { return s == Stat::Row ? row : s == Stat::Col ? col : diag; }
    Complex& scalar(Stat s) { return s == Stat::Total ? total : trace; }
    Complex scalar(Stat s) const { return s == Stat::Total ? total : trace; }
};

struct SmForwardCache {
    std::vector<std::vector<Complex>> transposed;
    std::vector<ChannelStats> stats;
};

void transpose_into(std::size_t m, const Complex* a, Complex* out)
{
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            out[j * m + i] = a[i * m + j];
}

}  // namespace

Var sm_tensor(Tape& t, Var tensor, const LinearLayer& layer, const ParamBinding& p, Pooling pool)
{
    if (layer.kind != LayerKind::SmTensor)
        throw std::invalid_argument("sm_tensor: wrong layer kind");
    const Features& x = t.value(tensor);
    if (x.channels != layer.in)
        throw std::invalid_argument("sm_tensor: channel mismatch");
    const std::size_t m = side_of(x.length);
    const std::size_t mm = m * m;
    const auto& kern = kernels::active();

    std::array<double, 15> scale{};
    for (std::size_t k = 0; k < 15; ++k)
        scale[k] = pool_scale(pool, kSmTensorSummedIndices[k], m);

    auto cache = std::make_shared<SmForwardCache>();
    cache->transposed.resize(layer.in);
    cache->stats.assign(layer.in, ChannelStats(m));
    for (std::size_t i = 0; i < layer.in; ++i) {
        const Complex* T = x.channel(i).data();
        cache->transposed[i].resize(mm);
        transpose_into(m, T, cache->transposed[i].data());
        auto& st = cache->stats[i];
        for (std::size_t r = 0; r < m; ++r) {
            st.row[r] = kern.sum(m, T + r * m);
            st.col[r] = kern.sum(m, cache->transposed[i].data() + r * m);
            st.diag[r] = T[r * m + r];
        }
        st.total = kern.sum(m, st.row.data());
        st.trace = kern.sum(m, st.diag.data());
    }

    Features out(layer.out, mm);
    std::vector<Complex> R(m), C(m), D(m);
    for (std::size_t o = 0; o < layer.out; ++o) {
        Complex* y = out.channel(o).data();
        std::fill(R.begin(), R.end(), Complex{});
        std::fill(C.begin(), C.end(), Complex{});
        std::fill(D.begin(), D.end(), Complex{});
        Complex K{};
        for (std::size_t i = 0; i < layer.in; ++i) {
            const std::size_t a0 = layer.coeff_index(o, i, 0);
            const std::size_t a1 = layer.coeff_index(o, i, 1);
            kern.rl_axpy(mm, p.complex_at(a0), p.complex_at(a0 + 2), x.channel(i).data(), y);
            kern.rl_axpy(mm, p.complex_at(a1), p.complex_at(a1 + 2), cache->transposed[i].data(), y);
            const auto& st = cache->stats[i];
            for (const auto& term : kSmTerms) {
                const std::size_t at = layer.coeff_index(o, i, term.basis);
                const Complex a = p.complex_at(at) * scale[term.basis];
                const Complex b = p.complex_at(at + 2) * scale[term.basis];
                if (st.vector_stat(term.stat)) {
                    auto& dst = term.target == Target::Row ? R : term.target == Target::Col ? C : D;
                    kern.rl_axpy(m, a, b, st.vec(term.stat).data(), dst.data());
                } else {
                    const Complex v = st.scalar(term.stat);
                    const Complex w = a * v + b * std::conj(v);
                    if (term.target == Target::Const)
                        K += w;
                    else
                        for (auto& d : D)
                            d += w;
                }
            }
        }
        {
            const std::size_t at = layer.bias_index(o, 0);
            K += p.complex_at(at) + p.complex_at(at + 2);
            const std::size_t ad = layer.bias_index(o, 1);
            const Complex bd = p.complex_at(ad) + p.complex_at(ad + 2);
            for (auto& d : D)
                d += bd;
        }
        for (std::size_t r = 0; r < m; ++r) {
            const Complex base = R[r] + K;
            for (std::size_t c = 0; c < m; ++c)
                y[r * m + c] += base + C[c];
            y[r * m + r] += D[r];
        }
    }

    const bool input_grad = t.needs_grad(tensor);
    return t.push(std::move(out), input_grad || p.differentiating(),
                  [tensor, layer, p, m, mm, scale, cache, input_grad](Tape& tp, std::size_t self) {
                      const auto& kern = kernels::active();
                      const Features& x = tp.value(tensor);
                      const auto g = tp.grad(Var{self});
                      std::span<Complex> gx;
                      if (input_grad)
                          gx = tp.grad_buffer(tensor.id);
                      std::vector<ChannelStats> gstats(layer.in, ChannelStats(m));
                      for (auto& gs : gstats)
                          gs.total = gs.trace = Complex{};
                      std::vector<Complex> Gt(mm), gR(m), gC(m), gD(m);

                      for (std::size_t o = 0; o < layer.out; ++o) {
                          const Complex* G = g.data() + o * mm;
                          transpose_into(m, G, Gt.data());
                          for (std::size_t r = 0; r < m; ++r) {
                              gR[r] = kern.sum(m, G + r * m);
                              gC[r] = kern.sum(m, Gt.data() + r * m);
                              gD[r] = G[r * m + r];
                          }
                          const Complex gK = kern.sum(m, gR.data());
                          const Complex gDsum = kern.sum(m, gD.data());

                          for (std::size_t i = 0; i < layer.in; ++i) {
                              const std::size_t a0 = layer.coeff_index(o, i, 0);
                              const std::size_t a1 = layer.coeff_index(o, i, 1);
                              if (input_grad) {
                                  Complex* gT = gx.data() + i * mm;
                                  kern.rl_axpy(mm, std::conj(p.complex_at(a0)), p.complex_at(a0 + 2), G, gT);
                                  kern.rl_axpy(mm, std::conj(p.complex_at(a1)), p.complex_at(a1 + 2), Gt.data(), gT);
                              }
                              if (p.differentiating()) {
                                  Complex cx, xg;
                                  kern.rl_dot(mm, x.channel(i).data(), G, &cx, &xg);
                                  add_rl_grad(p, a0, cx, xg);
                                  kern.rl_dot(mm, cache->transposed[i].data(), G, &cx, &xg);
                                  add_rl_grad(p, a1, cx, xg);
                              }
                              const auto& st = cache->stats[i];
                              auto& gs = gstats[i];
                              for (const auto& term : kSmTerms) {
                                  const std::size_t at = layer.coeff_index(o, i, term.basis);
                                  const double s = scale[term.basis];
                                  const Complex a = p.complex_at(at);
                                  const Complex b = p.complex_at(at + 2);
                                  if (st.vector_stat(term.stat)) {
                                      const auto& gt = term.target == Target::Row   ? gR
                                                       : term.target == Target::Col ? gC
                                                                                    : gD;
                                      if (input_grad)
                                          kern.rl_axpy(m, s * std::conj(a), s * b, gt.data(),
                                                       gs.vec(term.stat).data());
                                      if (p.differentiating()) {
                                          Complex cx, xg;
                                          kern.rl_dot(m, st.vec(term.stat).data(), gt.data(), &cx, &xg);
                                          add_rl_grad(p, at, s * cx, s * xg);
                                      }
                                  } else {
                                      const Complex gt = term.target == Target::Const ? gK : gDsum;
                                      if (input_grad)
                                          gs.scalar(term.stat) += s * (std::conj(a) * gt + b * std::conj(gt));
                                      if (p.differentiating()) {
                                          const Complex v = st.scalar(term.stat);
                                          add_rl_grad(p, at, s * std::conj(v) * gt, s * v * gt);
                                      }
                                  }
                              }
                          }
                          if (p.differentiating()) {
                              add_rl_grad(p, layer.bias_index(o, 0), gK, gK);
                              add_rl_grad(p, layer.bias_index(o, 1), gDsum, gDsum);
                          }
                      }

                      if (!input_grad)
                          return;
                      for (std::size_t i = 0; i < layer.in; ++i) {
                          const auto& gs = gstats[i];
                          Complex* gT = gx.data() + i * mm;
                          for (std::size_t r = 0; r < m; ++r) {
                              const Complex base = gs.row[r] + gs.total;
                              for (std::size_t c = 0; c < m; ++c)
                                  gT[r * m + c] += base + gs.col[c];
                              gT[r * m + r] += gs.diag[r] + gs.trace;
                          }
                      }
                  });
}

Var complex_mix(Tape& t, Var v, const LinearLayer& layer, const ParamBinding& p)
{
    if (!layer.complex_linear())
        throw std::invalid_argument("complex_mix: layer is not complex-linear");
    const Features& x = t.value(v);
    if (x.channels != layer.in)
        throw std::invalid_argument("complex_mix: channel mismatch");
    const std::size_t n = x.length;
    const bool with_mean = layer.kind == LayerKind::ComplexSm;
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto& kern = kernels::active();

    std::vector<Complex> means(layer.in);
    for (std::size_t i = 0; i < layer.in; ++i)
        means[i] = kern.sum(n, x.channel(i).data()) * inv_n;

    Features out(layer.out, n);
    for (std::size_t o = 0; o < layer.out; ++o) {
        Complex* y = out.channel(o).data();
        Complex shift{};
        for (std::size_t i = 0; i < layer.in; ++i) {
            kern.rl_axpy(n, p.complex_at(layer.coeff_index(o, i, 0)), Complex{}, x.channel(i).data(), y);
            if (with_mean)
                shift += p.complex_at(layer.coeff_index(o, i, 1)) * means[i];
        }
        if (with_mean)
            for (std::size_t q = 0; q < n; ++q)
                y[q] += shift;
    }
    const bool input_grad = t.needs_grad(v);
    return t.push(std::move(out), input_grad || p.differentiating(),
                  [v, layer, p, n, with_mean, inv_n, means, input_grad](Tape& tp, std::size_t self) {
                      const auto& kern = kernels::active();
                      const Features& x = tp.value(v);
                      const auto g = tp.grad(Var{self});
                      std::span<Complex> gx;
                      if (input_grad)
                          gx = tp.grad_buffer(v.id);
                      for (std::size_t o = 0; o < layer.out; ++o) {
                          const Complex* G = g.data() + o * n;
                          const Complex gsum = with_mean ? kern.sum(n, G) : Complex{};
                          for (std::size_t i = 0; i < layer.in; ++i) {
                              const std::size_t c0 = layer.coeff_index(o, i, 0);
                              if (input_grad) {
                                  Complex* gi = gx.data() + i * n;
                                  kern.rl_axpy(n, std::conj(p.complex_at(c0)), Complex{}, G, gi);
                                  if (with_mean) {
                                      const Complex shift =
                                          std::conj(p.complex_at(layer.coeff_index(o, i, 1))) * gsum * inv_n;
                                      for (std::size_t q = 0; q < n; ++q)
                                          gi[q] += shift;
                                  }
                              }
                              if (p.differentiating()) {
                                  Complex cx, xg;
                                  kern.rl_dot(n, x.channel(i).data(), G, &cx, &xg);
                                  add_param_grad(p, c0, cx);
                                  if (with_mean)
                                      add_param_grad(p, layer.coeff_index(o, i, 1), std::conj(means[i]) * gsum);
                              }
                          }
                      }
                  });
}

Var leaky(Tape& t, Var x, double slope)
{
    const Features& in = t.value(x);
    Features out(in.channels, in.length);
    const std::size_t reals = 2 * in.data.size();
    kernels::active().leaky_forward(reals, slope, reinterpret_cast<const double*>(in.data.data()),
                                    reinterpret_cast<double*>(out.data.data()));
    if (tl_monitor)
        for (auto z : in.data) {
            tl_monitor->note(std::abs(z.real()), z.real() >= 0.0);
            tl_monitor->note(std::abs(z.imag()), z.imag() >= 0.0);
        }
    return t.push(std::move(out), t.needs_grad(x), [x, slope, reals](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gx = tp.grad_buffer(x.id);
        kernels::active().leaky_backward(reals, slope, reinterpret_cast<const double*>(tp.value(x).data.data()),
                                         reinterpret_cast<const double*>(g.data()),
                                         reinterpret_cast<double*>(gx.data()));
    });
}

Var complex_relu(Tape& t, Var x, std::size_t eta_offset, const ParamBinding& p)
{
    const Features& in = t.value(x);
    Features out(in.channels, in.length);
    for (std::size_t c = 0; c < in.channels; ++c) {
        const double eta = p.values[eta_offset + c];
        for (std::size_t q = 0; q < in.length; ++q) {
            out.at(c, q) = zz::complex_relu(in.at(c, q), eta);
            if (tl_monitor) {
                const double r = std::abs(in.at(c, q));
                tl_monitor->note(std::min(r, std::abs(r - eta)), r > eta);
            }
        }
    }
    const bool input_grad = t.needs_grad(x);
    return t.push(std::move(out), input_grad || p.differentiating(),
                  [x, eta_offset, p, input_grad](Tape& tp, std::size_t self) {
                      const Features& in = tp.value(x);
                      const auto g = tp.grad(Var{self});
                      std::span<Complex> gx;
                      if (input_grad)
                          gx = tp.grad_buffer(x.id);
                      for (std::size_t c = 0; c < in.channels; ++c) {
                          const double eta = p.values[eta_offset + c];
                          double geta = 0.0;
                          for (std::size_t q = 0; q < in.length; ++q) {
                              const Complex z = in.at(c, q);
                              const double r = std::abs(z);
                              if (r <= eta || r == 0.0)
                                  continue;
                              const Complex gy = g[c * in.length + q];
                              const Complex u = z / r;
                              const double proj = (std::conj(u) * gy).real();
                              if (input_grad)
                                  gx[c * in.length + q] += gy - (eta / r) * (gy - u * proj);
                              geta -= proj;
                          }
                          if (p.grads)
                              p.grads[eta_offset + c] += geta;
                      }
                  });
}

Var l2_normalize(Tape& t, Var v)
{
    const Features& in = t.value(v);
    Features out(in.channels, in.length);
    std::vector<double> norms(in.channels);
    for (std::size_t c = 0; c < in.channels; ++c) {
        double s = 0.0;
        for (auto z : in.channel(c))
            s += std::norm(z);
        norms[c] = std::max(std::sqrt(s), kNormFloor);
        for (std::size_t q = 0; q < in.length; ++q)
            out.at(c, q) = in.at(c, q) / norms[c];
    }
    return t.push(std::move(out), t.needs_grad(v), [v, norms](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        const Features& y = tp.value(Var{self});
        auto gv = tp.grad_buffer(v.id);
        const std::size_t n = y.length;
        for (std::size_t c = 0; c < y.channels; ++c) {
            double dot = 0.0;
            const bool floored = norms[c] <= kNormFloor;
            if (!floored)
                for (std::size_t q = 0; q < n; ++q)
                    dot += (std::conj(y.at(c, q)) * g[c * n + q]).real();
            for (std::size_t q = 0; q < n; ++q)
                gv[c * n + q] += (g[c * n + q] - y.at(c, q) * dot) / norms[c];
        }
    });
}

Var row_pool(Tape& t, Var tensor, Pooling pool)
{
    const Features& in = t.value(tensor);
    const std::size_t m = side_of(in.length);
    const double s = pool_scale(pool, 1, m);
    const auto& kern = kernels::active();
    Features out(in.channels, m);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t r = 0; r < m; ++r)
            out.at(c, r) = s * kern.sum(m, in.channel(c).data() + r * m);
    return t.push(std::move(out), t.needs_grad(tensor), [tensor, m, s](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gx = tp.grad_buffer(tensor.id);
        const std::size_t channels = tp.channels(tensor);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t r = 0; r < m; ++r) {
                const Complex v = s * g[c * m + r];
                Complex* row = gx.data() + (c * m + r) * m;
                for (std::size_t q = 0; q < m; ++q)
                    row[q] += v;
            }
    });
}

Var point_pool(Tape& t, Var v, Pooling pool)
{
    const Features& in = t.value(v);
    const std::size_t n = in.length;
    const double s = pool == Pooling::Mean ? 1.0 / static_cast<double>(n) : 1.0;
    Features out(in.channels, 1);
    for (std::size_t c = 0; c < in.channels; ++c)
        out.at(c, 0) = s * kernels::active().sum(n, in.channel(c).data());
    return t.push(std::move(out), t.needs_grad(v), [v, n, s](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gx = tp.grad_buffer(v.id);
        for (std::size_t c = 0; c < g.size(); ++c)
            for (std::size_t q = 0; q < n; ++q)
                gx[c * n + q] += s * g[c];
    });
}

Var multiply(Tape& t, Var a, Var b)
{
    const Features& x = t.value(a);
    const Features& y = t.value(b);
    if (x.channels != y.channels || x.length != y.length)
        throw std::invalid_argument("multiply: shape mismatch");
    Features out(x.channels, x.length);
    for (std::size_t k = 0; k < x.data.size(); ++k)
        out.data[k] = x.data[k] * y.data[k];
    const bool ga = t.needs_grad(a), gb = t.needs_grad(b);
    return t.push(std::move(out), ga || gb, [a, b, ga, gb](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        const auto& x = tp.value(a).data;
        const auto& y = tp.value(b).data;
        if (ga) {
            auto gx = tp.grad_buffer(a.id);
            for (std::size_t k = 0; k < g.size(); ++k)
                gx[k] += std::conj(y[k]) * g[k];
        }
        if (gb) {
            auto gy = tp.grad_buffer(b.id);
            for (std::size_t k = 0; k < g.size(); ++k)
                gy[k] += std::conj(x[k]) * g[k];
        }
    });
}

Var concat(Tape& t, std::span<const Var> parts)
{
    if (parts.empty())
        throw std::invalid_argument("concat: no inputs");
    const std::size_t n = t.length(parts[0]);
    std::size_t channels = 0;
    bool any_grad = false;
    for (Var v : parts) {
        if (t.length(v) != n)
            throw std::invalid_argument("concat: length mismatch");
        channels += t.channels(v);
        any_grad = any_grad || t.needs_grad(v);
    }
    Features out(channels, n);
    std::size_t at = 0;
    for (Var v : parts) {
        const auto& d = t.value(v).data;
        std::copy(d.begin(), d.end(), out.data.begin() + static_cast<std::ptrdiff_t>(at));
        at += d.size();
    }
    std::vector<Var> ids(parts.begin(), parts.end());
    return t.push(std::move(out), any_grad, [ids](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        std::size_t at = 0;
        for (Var v : ids) {
            const std::size_t size = tp.value(v).data.size();
            if (tp.needs_grad(v)) {
                auto gv = tp.grad_buffer(v.id);
                for (std::size_t k = 0; k < size; ++k)
                    gv[k] += g[at + k];
            }
            at += size;
        }
    });
}

Var stack_scalars(Tape& t, std::span<const Var> scalars)
{
    Features out(1, scalars.size());
    bool any_grad = false;
    for (std::size_t k = 0; k < scalars.size(); ++k) {
        out.data[k] = t.value(scalars[k]).data.at(0);
        any_grad = any_grad || t.needs_grad(scalars[k]);
    }
    std::vector<Var> ids(scalars.begin(), scalars.end());
    return t.push(std::move(out), any_grad, [ids](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        for (std::size_t k = 0; k < ids.size(); ++k)
            if (tp.needs_grad(ids[k]))
                tp.grad_buffer(ids[k].id)[0] += g[k];
    });
}

Var permute_points(Tape& t, Var v, const Permutation& pi)
{
    const Features& in = t.value(v);
    if (pi.size() != in.length)
        throw std::invalid_argument("permute_points: length mismatch");
    Features out(in.channels, in.length);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t q = 0; q < in.length; ++q)
            out.at(c, q) = in.at(c, pi.inverse(q));
    return t.push(std::move(out), t.needs_grad(v), [v, pi](Tape& tp, std::size_t self) {
        const auto g = tp.grad(Var{self});
        auto gx = tp.grad_buffer(v.id);
        const std::size_t n = pi.size();
        for (std::size_t c = 0; c < g.size() / n; ++c)
            for (std::size_t q = 0; q < n; ++q)
                gx[c * n + pi.inverse(q)] += g[c * n + q];
    });
}

Var rotation_head(Tape& t, Var f_zx, Var f_xz)
{
    const Complex a = t.value(f_zx).data.at(0);
    const Complex b = t.value(f_xz).data.at(0);
    Features out(1, 1);
    out.data[0] = b * std::conj(a);
    const bool ga = t.needs_grad(f_zx), gb = t.needs_grad(f_xz);
    return t.push(std::move(out), ga || gb, [f_zx, f_xz, a, b, ga, gb](Tape& tp, std::size_t self) {
        const Complex g = tp.grad(Var{self})[0];
        if (gb)
            tp.grad_buffer(f_xz.id)[0] += a * g;
        if (ga)
            tp.grad_buffer(f_zx.id)[0] += b * std::conj(g);
    });
}

Var squared_error(Tape& t, Var pred, Complex truth)
{
    const Complex d = t.value(pred).data.at(0) - truth;
    Features out(1, 1);
    out.data[0] = std::norm(d);
    return t.push(std::move(out), t.needs_grad(pred), [pred, d](Tape& tp, std::size_t self) {
        const double g = tp.grad(Var{self})[0].real();
        tp.grad_buffer(pred.id)[0] += 2.0 * d * g;
    });
}

}  // namespace op

}  // namespace zz
