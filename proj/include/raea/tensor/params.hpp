// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "raea/tensor/autodiff.hpp"

namespace raea::tensor {

/// Ordered, named collection of trainable tensors.
class ParamStore {
public:
    std::size_t add(std::string name, Tensor init);
    std::size_t index(const std::string& name) const;
    bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t scalar_count() const;
    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    Tensor& operator[](std::size_t i) { return values_[i]; }
    const Tensor& operator[](std::size_t i) const { return values_[i]; }
    std::vector<Tensor>& values() noexcept { return values_; }
    const std::vector<Tensor>& values() const noexcept { return values_; }

    std::vector<Tensor> zeros_like() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

/// Lazily exposes store entries as leaves on one tape, so every parameter
/// appears at most once and its gradient accumulates across uses.
class ParamBinding {
public:
    ParamBinding(Tape& tape, const ParamStore& store, bool requires_grad = true)
        : tape_(tape), store_(store), requires_grad_(requires_grad), ids_(store.size()) {}
    /// Binds pre-made leaves, one per store entry (used by gradient checks).
    ParamBinding(Tape& tape, const ParamStore& store, std::span<const Var> leaves);

    Var operator[](std::size_t i);
    Tape& tape() noexcept { return tape_; }

    /// Adds gradients of every bound parameter into `out` (aligned with the store).
    void accumulate_grads(std::vector<Tensor>& out) const;

private:
    Tape& tape_;
    const ParamStore& store_;
    bool requires_grad_;
    std::vector<Var> ids_;
};

}  // namespace raea::tensor
