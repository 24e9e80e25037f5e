// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "raea/tensor/autodiff.hpp"

namespace raea::tensor {

struct GradCheckOptions {
    double eps = 1e-5;
    /// Denominator floor: err = |a - n| / max(|a|, |n|, floor).
    double floor = 1e-4;
    /// Coordinates checked per tensor; 0 checks all of them.
    std::size_t max_coords_per_param = 0;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
    bool finite = true;
    std::string worst;  // "param[i]" of the largest relative error
};

/// Builds a scalar on the given tape from leaves bound to `params`.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares reverse-mode gradients against central differences
/// (f(p+eps) - f(p-eps)) / 2eps, coordinate by coordinate. `params` is
/// perturbed in place and restored before returning.
GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor>& params, const GradCheckOptions& opts = {});

}  // namespace raea::tensor
