// SPDX-License-Identifier: Apache-2.0
#include "raea/trainer/schedule.hpp"

#include <cmath>
#include <numbers>

#include "raea/common/error.hpp"

namespace raea::train {

std::int64_t warmup_steps(double warmup_frac, std::int64_t total_steps) {
    return static_cast<std::int64_t>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
}

double lr_at(std::int64_t step, double base_lr, double warmup_frac, std::int64_t total_steps) {
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (step < 0 || step > total_steps) throw ConfigError("lr_at: step outside [0, total_steps]");
    const std::int64_t w = warmup_steps(warmup_frac, total_steps);
    if (step < w) return base_lr * static_cast<double>(step) / static_cast<double>(w);
    if (w == total_steps) return base_lr;
    const double progress = static_cast<double>(step - w) / static_cast<double>(total_steps - w);
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double global_norm(const std::vector<tensor::Tensor>& grads) {
    double s = 0.0;
    for (const auto& g : grads)
        for (double v : g.values()) s += v * v;
    return std::sqrt(s);
}

double clip_gradients(std::vector<tensor::Tensor>& grads, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("grad_clip must be positive");
    const double g = global_norm(grads);
    if (g <= max_norm) return g;
    const double s = max_norm / g;
    for (auto& t : grads) t.scale_inplace(s);
    return global_norm(grads);
}

}  // namespace raea::train
