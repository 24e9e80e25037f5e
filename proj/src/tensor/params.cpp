// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/params.hpp"

#include "raea/common/error.hpp"

namespace raea::tensor {

std::size_t ParamStore::add(std::string name, Tensor init) {
    if (by_name_.count(name)) throw ConfigError("duplicate parameter name " + name);
    by_name_.emplace(name, values_.size());
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
    return values_.size() - 1;
}

std::size_t ParamStore::index(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::vector<Tensor> ParamStore::zeros_like() const {
    std::vector<Tensor> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.emplace_back(v.shape(), 0.0);
    return out;
}

ParamBinding::ParamBinding(Tape& tape, const ParamStore& store, std::span<const Var> leaves)
    : tape_(tape), store_(store), requires_grad_(true), ids_(leaves.begin(), leaves.end()) {
    if (ids_.size() != store.size()) throw DimensionError("one leaf per parameter required");
}

Var ParamBinding::operator[](std::size_t i) {
    if (!ids_[i].valid()) ids_[i] = tape_.leaf_ref(store_[i], requires_grad_);
    return ids_[i];
}

void ParamBinding::accumulate_grads(std::vector<Tensor>& out) const {
    if (out.size() != ids_.size()) throw DimensionError("gradient buffer count mismatch");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!ids_[i].valid() || !tape_.has_grad(ids_[i])) continue;
        out[i].add_inplace(tape_.grad(ids_[i]));
    }
}

}  // namespace raea::tensor
