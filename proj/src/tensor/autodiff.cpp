// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/autodiff.hpp"

#include "raea/common/error.hpp"

namespace raea::tensor {

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && record_;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::leaf_ref(const Tensor& value, bool requires_grad) {
    Node n;
    n.ref = &value;
    n.requires_grad = requires_grad && record_;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    bool rg = false;
    for (const Var& p : parents) rg = rg || nodes_[p.id()].requires_grad;
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg && record_;
    if (n.requires_grad) n.fn = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Var Tape::push(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
    bool rg = false;
    for (const Var& p : parents) rg = rg || nodes_[p.id()].requires_grad;
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg && record_;
    if (n.requires_grad) n.fn = std::move(fn);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(value(id).shape(), 0.0);
    return n.grad;
}

void Tape::backward(Var out) {
    if (!record_) throw Error("autodiff", "backward on a non-recording tape");
    if (out.tape() != this) throw Error("autodiff", "backward target belongs to another tape");
    if (value(out.id()).size() != 1) throw DimensionError("backward target must be a scalar");
    for (auto& n : nodes_) n.grad = Tensor();
    backward_order_.clear();
    grad_buffer(out.id())[0] = 1.0;
    for (std::size_t i = out.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.fn || n.grad.empty()) continue;
        backward_order_.push_back(i);
        n.fn(*this, i);
    }
}

}  // namespace raea::tensor
