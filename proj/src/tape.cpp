#include "zz/tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace zz {

Var Tape::leaf(Features value, bool requires_grad)
{
    if (consumed_)
        throw std::logic_error("tape already consumed by backward()");
    nodes_.push_back(Node{std::move(value), {}, requires_grad, {}});
    return Var{nodes_.size() - 1};
}

Var Tape::push(Features value, bool needs_grad, Backward backward)
{
    if (consumed_)
        throw std::logic_error("tape already consumed by backward()");
    nodes_.push_back(Node{std::move(value), {}, needs_grad, needs_grad ? std::move(backward) : Backward{}});
    return Var{nodes_.size() - 1};
}

std::span<Complex> Tape::grad_buffer(std::size_t id)
{
    Node& n = nodes_[id];
    if (n.grad.empty())
        n.grad.assign(n.value.data.size(), Complex{});
    return n.grad;
}

void Tape::backward(Var root, Complex seed)
{
    const std::vector<Complex> seeds(nodes_.at(root.id).value.data.size(), seed);
    backward(root, seeds);
}

void Tape::backward(Var root, std::span<const Complex> seed)
{
    if (consumed_)
        throw std::logic_error("tape already consumed by backward()");
    if (seed.size() != nodes_.at(root.id).value.data.size())
        throw std::invalid_argument("backward: seed size does not match the root");
    consumed_ = true;
    if (!nodes_[root.id].needs_grad)
        return;
    auto g = grad_buffer(root.id);
    std::copy(seed.begin(), seed.end(), g.begin());
    for (std::size_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.empty() || !n.backward)
            continue;
        n.backward(*this, id);
    }
}

}  // namespace zz
