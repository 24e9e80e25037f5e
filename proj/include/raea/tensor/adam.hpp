// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "raea/tensor/tensor.hpp"

namespace raea::tensor {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled (AdamW) decay; zero gives plain Adam.
    double weight_decay = 0.0;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t step = 0;

    static AdamState zeros_like(const std::vector<Tensor>& params);
};

/// One bias-corrected Adam update in place. Throws ConfigError when lr < 0.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace raea::tensor
