// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/adam.hpp"

#include <cmath>

#include "raea/common/error.hpp"

namespace raea::tensor {

AdamState AdamState::zeros_like(const std::vector<Tensor>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
        s.m.emplace_back(p.shape(), 0.0);
        s.v.emplace_back(p.shape(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (!(cfg.lr >= 0.0)) throw ConfigError("adam: learning rate must be non-negative");
    if (grads.size() != params.size()) throw DimensionError("adam: params/grads count mismatch");
    if (state.m.size() != params.size()) state = AdamState::zeros_like(params);

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        const Tensor& g = grads[k];
        if (g.size() != p.size()) throw DimensionError("adam: gradient shape mismatch");
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            double update = mhat / (std::sqrt(vhat) + cfg.eps);
            if (cfg.weight_decay > 0.0) update += cfg.weight_decay * p[i];
            p[i] -= cfg.lr * update;
        }
    }
}

}  // namespace raea::tensor
