// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "raea/common/rng.hpp"

namespace raea::tensor {

namespace {

double evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
    Tape tape(false);
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf_ref(p, false));
    return f(tape, leaves).value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor>& params, const GradCheckOptions& opts) {
    GradCheckReport report;

    std::vector<Tensor> analytic;
    {
        Tape tape(true);
        std::vector<Var> leaves;
        for (const auto& p : params) leaves.push_back(tape.leaf_ref(p, true));
        Var out = f(tape, leaves);
        if (!std::isfinite(out.value()[0])) {
            report.finite = false;
            return report;
        }
        tape.backward(out);
        for (std::size_t k = 0; k < params.size(); ++k) {
            analytic.push_back(tape.has_grad(leaves[k]) ? tape.grad(leaves[k]) : Tensor(params[k].shape(), 0.0));
        }
    }

    Rng rng(opts.seed);
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<std::size_t> coords(params[k].size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (opts.max_coords_per_param && coords.size() > opts.max_coords_per_param) {
            for (std::size_t i = 0; i < opts.max_coords_per_param; ++i) {
                std::swap(coords[i], coords[i + rng.index(coords.size() - i)]);
            }
            coords.resize(opts.max_coords_per_param);
        }
        for (std::size_t i : coords) {
            const double orig = params[k][i];
            params[k][i] = orig + opts.eps;
            const double fp = evaluate(f, params);
            params[k][i] = orig - opts.eps;
            const double fm = evaluate(f, params);
            params[k][i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                report.finite = false;
                return report;
            }
            const double numeric = (fp - fm) / (2.0 * opts.eps);
            const double a = analytic[k][i];
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opts.floor});
            report.max_abs_error = std::max(report.max_abs_error, abs_err);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = std::to_string(k) + "[" + std::to_string(i) + "]";
            }
            ++report.checked;
        }
    }
    return report;
}

}  // namespace raea::tensor
