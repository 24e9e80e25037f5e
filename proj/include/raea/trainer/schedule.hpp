// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "raea/tensor/tensor.hpp"

namespace raea::train {

/// Linear warmup from 0 to base_lr over ceil(warmup_frac * total) steps,
/// then cosine decay to 0 at total_steps.
double lr_at(std::int64_t step, double base_lr, double warmup_frac, std::int64_t total_steps);
std::int64_t warmup_steps(double warmup_frac, std::int64_t total_steps);

double global_norm(const std::vector<tensor::Tensor>& grads);

/// Rescales all gradients by max_norm / g when the global L2 norm g exceeds
/// max_norm. Returns the norm after clipping.
double clip_gradients(std::vector<tensor::Tensor>& grads, double max_norm);

}  // namespace raea::train
