// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "raea/tensor/tensor.hpp"

namespace raea::tensor {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    bool valid() const noexcept { return tape_ != nullptr; }
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }
    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = std::numeric_limits<std::size_t>::max();
};

/// Reverse-mode gradient tape. Rebuilt for every forward pass; confined to
/// one thread for its lifetime.
///
/// Nodes are appended in forward order; backward() visits them in exactly the
/// reverse order and accumulates additively into each parent's gradient.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    /// With `record == false` nothing is kept for backward (inference mode).
    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = true);
    /// Leaf that aliases an external tensor; the tensor must outlive the tape.
    Var leaf_ref(const Tensor& value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    /// Appends an op result. `fn` is dropped when no parent requires grad.
    Var push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
    Var push(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

    const Tensor& value(std::size_t id) const {
        const Node& n = nodes_[id];
        return n.ref ? *n.ref : n.value;
    }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    bool recording() const noexcept { return record_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient buffer for `id`, zero-allocated on first touch.
    Tensor& grad_buffer(std::size_t id);
    /// Gradient of the last backward() target w.r.t. `v`; empty when unreached.
    const Tensor& grad(Var v) const { return nodes_[v.id()].grad; }
    bool has_grad(Var v) const { return !nodes_[v.id()].grad.empty(); }

    /// Seeds d(out)/d(out) = 1 for a scalar `out` and runs the reverse sweep.
    void backward(Var out);
    /// Node ids in the order the last backward() visited them.
    const std::vector<std::size_t>& last_backward_order() const noexcept { return backward_order_; }

private:
    struct Node {
        Tensor value;
        const Tensor* ref = nullptr;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn fn;
    };

    bool record_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> backward_order_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace raea::tensor
