// SPDX-License-Identifier: Apache-2.0
#include "raea/generator/model.hpp"

#include <cmath>

#include "raea/common/error.hpp"

namespace raea::gen {

namespace ops = tensor;
using tensor::Tape;
using tensor::Tensor;

namespace {

Var layer_norm(ParamBinding& pb, const LayerNormIdx& idx, Var x) {
    return ops::layer_norm(x, pb[idx.gamma], pb[idx.beta]);
}

Var attend(Var q, Var k, Var v, double scale, ForwardTrace* trace) {
    Var a = ops::softmax_rows(ops::scale(ops::matmul_nt(q, k), scale));
    if (trace) trace->attention.push_back(a.value());
    return ops::matmul(a, v);
}

}  // namespace

Var self_attention(ParamBinding& pb, const GeneratorParams& params, const BlockIdx& b, Var x, ForwardTrace* trace) {
    const GeneratorConfig& cfg = params.config();
    const std::size_t dh = static_cast<std::size_t>(cfg.d_h());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Var xn = layer_norm(pb, b.ln1, x);
    Var q = ops::matmul(xn, pb[b.wq]);
    Var k = ops::matmul(xn, pb[b.wk]);
    Var v = ops::matmul(xn, pb[b.wv]);
    std::vector<Var> heads;
    for (int h = 0; h < cfg.n_heads; ++h) {
        const std::size_t c = static_cast<std::size_t>(h) * dh;
        heads.push_back(
            attend(ops::slice_cols(q, c, dh), ops::slice_cols(k, c, dh), ops::slice_cols(v, c, dh), scale, trace));
    }
    Var out = ops::linear(ops::concat_cols(heads), pb[b.wo], pb[b.bo]);
    return ops::add(x, out);
}

Var cross_attention(ParamBinding& pb, const GeneratorParams& params, const CrossAttentionIdx& idx, Var fx, Var fr,
                    ForwardTrace* trace) {
    if (!fr.valid() || fr.rows() == 0) return fx;
    const GeneratorConfig& cfg = params.config();
    const std::size_t dh = static_cast<std::size_t>(cfg.d_h());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool from_main = cfg.attn_query_source == QuerySource::main;

    Var xn = layer_norm(pb, idx.ln_x, fx);
    Var rn = layer_norm(pb, idx.ln_r, fr);
    Var query_src = from_main ? xn : rn;
    Var kv_src = from_main ? rn : xn;
    Var q = ops::matmul(query_src, pb[idx.wq]);

    std::vector<Var> heads;
    for (int h = 0; h < cfg.n_heads; ++h) {
        const std::size_t hh = static_cast<std::size_t>(h);
        Var s = ops::downsample_concat(kv_src, static_cast<std::size_t>(cfg.sc_rate(h)), pb[idx.sc[hh]]);
        Var k = ops::matmul(s, pb[idx.wk[hh]]);
        Var v = ops::matmul(s, pb[idx.wv[hh]]);
        v = ops::add(v, ops::depthwise_conv1d(v, pb[idx.p[hh]]));
        heads.push_back(attend(ops::slice_cols(q, hh * dh, dh), k, v, scale, trace));
    }
    Var h = ops::linear(ops::concat_cols(heads), pb[idx.wo], pb[idx.bo]);
    if (from_main) return ops::add(fx, h);
    return ops::add_rowwise(fx, ops::mean_rows(h));
}

Var film_fusion(ParamBinding& pb, const FilmIdx& idx, Var fx, Var fr) {
    if (!fr.valid() || fr.rows() == 0) return fx;
    Var pooled = ops::mean_rows(fr);
    Var gamma = ops::linear(pooled, pb[idx.wg], pb[idx.bg]);
    Var beta = ops::linear(pooled, pb[idx.wb], pb[idx.bb]);
    return ops::add_rowwise(ops::mul_rowwise(fx, gamma), beta);
}

Var forward(ParamBinding& pb, const GeneratorParams& params, const MainInput& in,
            const std::vector<RetrievedFragment>& retrieved, ForwardTrace* trace) {
    const GeneratorConfig& cfg = params.config();
    const ParamLayout& L = params.layout();
    if (in.proprio.empty()) throw DimensionError("main input has no proprioception");

    TokenSequence ctx;
    if (cfg.fusion != Fusion::none && !retrieved.empty()) ctx = assemble_retrieved_context(pb, params, retrieved);

    TokenSequence main = tokenize_main(pb, params, in);
    Var x;
    std::size_t readout = 0;
    if (cfg.fusion == Fusion::concat && !ctx.empty()) {
        main = add_positions(pb, params, std::move(main), ctx.size());
        x = concat_fusion(main, ctx, readout).tokens;
    } else {
        main = add_positions(pb, params, std::move(main), 0);
        readout = readout_index(main);
        x = main.tokens;
    }

    for (const BlockIdx& b : L.blocks) {
        x = self_attention(pb, params, b, x, trace);
        if (!ctx.empty()) {
            if (cfg.fusion == Fusion::cross_attention) x = cross_attention(pb, params, b.xattn, x, ctx.tokens, trace);
            if (cfg.fusion == Fusion::film) x = film_fusion(pb, b.film, x, ctx.tokens);
        }
        Var hidden = ops::gelu(ops::linear(layer_norm(pb, b.ln3, x), pb[b.ffn_w1], pb[b.ffn_b1]));
        x = ops::add(x, ops::linear(hidden, pb[b.ffn_w2], pb[b.ffn_b2]));
    }
    Var r = layer_norm(pb, L.ln_f, ops::slice_rows(x, readout, 1));
    return ops::linear(r, pb[L.head_w], pb[L.head_b]);
}

Var bc_loss(Var pred, const std::vector<double>& target) {
    if (pred.rows() != 1 || pred.cols() != target.size()) {
        throw DimensionError("bc_loss: prediction " + pred.value().shape_str() + " vs target of " +
                             std::to_string(target.size()));
    }
    return ops::masked_mse(pred, Tensor::row(target), std::vector<bool>(target.size(), true));
}

Var action_loss(Var head, const std::vector<double>& target) {
    if (target.empty() || target.size() > head.cols()) throw DimensionError("action_loss: bad target width");
    return bc_loss(ops::slice_cols(head, 0, target.size()), target);
}

std::vector<double> predict(const GeneratorParams& params, const MainInput& in,
                            const std::vector<RetrievedFragment>& retrieved, int action_dim) {
    if (action_dim < 1 || action_dim > kMaxStateDim) throw CapViolation("action_dim outside [1, 9]");
    Tape tape(false);
    ParamBinding pb(tape, params.store(), false);
    Var out = forward(pb, params, in, retrieved);
    const auto v = out.value().values();
    return {v.begin(), v.begin() + action_dim};
}

}  // namespace raea::gen
