// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "raea/tensor/autodiff.hpp"

namespace raea::tensor {

inline constexpr double kLayerNormEps = 1e-5;

// Every op checks shapes and throws DimensionError (or ConfigError for bad
// hyper-parameters). Rank-1 operands are treated as a single row.

Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// x + b with b broadcast over the rows of x.
Var add_rowwise(Var x, Var b);
/// x (.) g with g broadcast over the rows of x.
Var mul_rowwise(Var x, Var g);

/// y = xW + b.
Var linear(Var x, Var W, Var b);
Var tanh(Var x);
/// Tanh approximation of GELU (smooth, so finite-difference checks stay tight).
Var gelu(Var x);
/// Row-wise softmax, stabilised by subtracting the row maximum.
Var softmax_rows(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);

/// Per-channel convolution along the token axis with zero padding.
/// x: n x d, kernels: d x w with w odd.
Var depthwise_conv1d(Var x, Var kernels);
/// Concatenates consecutive groups of `rate` rows feature-wise; the last
/// partial group is zero padded. Result: ceil(n/rate) x (rate*d).
Var group_concat(Var x, std::size_t rate);
/// group_concat followed by a linear map W: (rate*d) x d_out.
Var downsample_concat(Var x, std::size_t rate, Var W);

Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
/// Mean over rows; result is 1 x d.
Var mean_rows(Var x);
/// Sum of all entries; result is 1 x 1.
Var sum(Var x);
/// sum(w (.) x) for a constant weight tensor, used to build scalar probes.
Var weighted_sum(Var x, const Tensor& w);
/// Mean squared error over entries where mask[i] is true. pred is 1 x n.
Var masked_mse(Var pred, const Tensor& target, const std::vector<bool>& mask);

}  // namespace raea::tensor
