// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "raea/generator/tokenizer.hpp"

namespace raea::gen {

/// Optional capture of every attention weight matrix computed in a forward pass.
struct ForwardTrace {
    std::vector<tensor::Tensor> attention;
};

Var self_attention(ParamBinding& pb, const GeneratorParams& params, const BlockIdx& block, Var x,
                   ForwardTrace* trace = nullptr);

/// Injects retrieved-policy context into the main tokens. With queries from
/// the main stream every main token attends over SC(F_r) keys/values; with
/// queries from the retrieved stream the per-retrieved-token outputs are
/// mean-pooled and added to every main token. Returns fx for an empty fr.
Var cross_attention(ParamBinding& pb, const GeneratorParams& params, const CrossAttentionIdx& idx, Var fx, Var fr,
                    ForwardTrace* trace = nullptr);

/// gamma (.) F_x + beta with (gamma, beta) from the mean retrieved token.
Var film_fusion(ParamBinding& pb, const FilmIdx& idx, Var fx, Var fr);

/// Full policy forward. Returns the 1 x 9 head output; entries past the
/// embodiment's action_dim are masked out by the caller.
Var forward(ParamBinding& pb, const GeneratorParams& params, const MainInput& in,
            const std::vector<RetrievedFragment>& retrieved, ForwardTrace* trace = nullptr);

/// Mean squared error over the entries of pred (1 x n) against target (n).
Var bc_loss(Var pred, const std::vector<double>& target);

/// bc_loss on the first target.size() head outputs.
Var action_loss(Var head, const std::vector<double>& target);

/// Inference without recording gradients; returns action_dim values.
std::vector<double> predict(const GeneratorParams& params, const MainInput& in,
                            const std::vector<RetrievedFragment>& retrieved, int action_dim);

}  // namespace raea::gen
