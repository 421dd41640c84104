#pragma once

#include "zz/cloud.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace zz {

/// Channelled complex feature block: `channels` rows of `length` entries.
/// A multivector has length m, a multitensor m*m, a multiscalar 1.
struct Features {
    std::size_t channels = 0;
    std::size_t length = 0;
    std::vector<Complex> data;

    Features() = default;
    Features(std::size_t channels_, std::size_t length_)
      : channels(channels_), length(length_), data(channels_ * length_)
    { }

    std::span<Complex> channel(std::size_t c) { return {data.data() + c * length, length}; }
    std::span<const Complex> channel(std::size_t c) const { return {data.data() + c * length, length}; }
    Complex& at(std::size_t c, std::size_t k) { return data[c * length + k]; }
    const Complex& at(std::size_t c, std::size_t k) const { return data[c * length + k]; }
};

using MultiVector = Features;
using MultiTensor = Features;
using MultiScalar = Features;

/// Flat view of the parameter vector and, when differentiating, its gradient.
/// Complex parameters occupy two consecutive reals (re, im).
struct ParamBinding {
    const double* values = nullptr;
    double* grads = nullptr;

    Complex complex_at(std::size_t offset) const { return {values[offset], values[offset + 1]}; }
    void add_complex_grad(std::size_t offset, Complex g) const
    {
        if (grads) {
            grads[offset] += g.real();
            grads[offset + 1] += g.imag();
        }
    }
    bool differentiating() const { return grads != nullptr; }
};

struct Var {
    std::size_t id = 0;
};

/// Records one forward pass; `backward` replays it once in reverse.
///
/// Adjoints follow the real-pair convention: for a real loss L and complex
/// entry z = x + iy the stored gradient is dL/dx + i dL/dy.
class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    /// Leaf whose gradient is kept (inspect with grad()) but not propagated.
    Var leaf(Features value, bool requires_grad = false);
    /// Internal node. `backward` may be empty when nothing upstream needs gradients.
    Var push(Features value, bool needs_grad, Backward backward);

    const Features& value(Var v) const { return nodes_[v.id].value; }
    std::size_t channels(Var v) const { return nodes_[v.id].value.channels; }
    std::size_t length(Var v) const { return nodes_[v.id].value.length; }
    bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

    /// Gradient accumulation buffer for `id`, zero-initialized on first use.
    std::span<Complex> grad_buffer(std::size_t id);
    /// Gradient after backward(); empty if no adjoint reached the node.
    std::span<const Complex> grad(Var v) const { return nodes_[v.id].grad; }

    /// Seeds d(root) = seed on every entry of `root` and runs the reverse sweep.
    /// Throws std::logic_error on a second call.
    void backward(Var root, Complex seed = {1.0, 0.0});
    /// Seeds d(root) entrywise from `seed` (root-sized); L = Re sum conj(seed_k) root_k.
    void backward(Var root, std::span<const Complex> seed);
    bool consumed() const { return consumed_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Features value;
        std::vector<Complex> grad;
        bool needs_grad = false;
        Backward backward;
    };

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace zz
