// SPDX-License-Identifier: Apache-2.0
#include "raea/generator/params.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"

namespace raea::gen {

namespace {

using tensor::Tensor;

enum class Init { zero, one, normal };

struct ParamSpec {
    std::size_t rows, cols;
    Init init;
    double std;
};

/// Walks the parameter list in a fixed order; `visit` either creates or
/// checks each tensor and returns its store index.
ParamLayout walk(const GeneratorConfig& cfg, const std::function<std::size_t(const std::string&, ParamSpec)>& visit) {
    const std::size_t d = static_cast<std::size_t>(cfg.d_model);
    const std::size_t dh = static_cast<std::size_t>(cfg.d_h());
    const std::size_t he = static_cast<std::size_t>(cfg.encoder_hidden);
    const std::size_t hf = static_cast<std::size_t>(cfg.ffn_hidden);
    const std::size_t fd = static_cast<std::size_t>(cfg.feature_dim);
    const double out_scale = 1.0 / std::sqrt(2.0 * cfg.n_blocks);
    auto w = [](std::size_t r, std::size_t c, double gain = 1.0) {
        return ParamSpec{r, c, Init::normal, gain / std::sqrt(static_cast<double>(r))};
    };
    auto zeros = [](std::size_t c) { return ParamSpec{1, c, Init::zero, 0.0}; };
    auto ones = [](std::size_t c) { return ParamSpec{1, c, Init::one, 0.0}; };
    auto ln = [&](const std::string& n) {
        return LayerNormIdx{visit(n + ".gamma", ones(d)), visit(n + ".beta", zeros(d))};
    };
    auto mlp = [&](const std::string& n) {
        return MlpIdx{visit(n + ".w1", w(kMaxStateDim, he)), visit(n + ".b1", zeros(he)), visit(n + ".w2", w(he, d)),
                      visit(n + ".b2", zeros(d))};
    };

    ParamLayout L;
    L.action_enc = mlp("action_enc");
    L.proprio_enc = mlp("proprio_enc");
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        const std::string n = "adapter." + std::string(env::to_string(static_cast<env::Modality>(m)));
        L.adapter_w[m] = visit(n + ".w", w(fd, d));
        L.adapter_b[m] = visit(n + ".b", zeros(d));
    }
    L.state_sep = visit("token.state_sep", {1, d, Init::normal, 0.1});
    L.policy_sep = visit("token.policy_sep", {1, d, Init::normal, 0.1});
    L.readout = visit("token.readout", {1, d, Init::normal, 0.1});
    L.positions = visit("positions", {kMaxPositions, d, Init::normal, 0.1});

    for (int b = 0; b < cfg.n_blocks; ++b) {
        const std::string n = "block" + std::to_string(b);
        BlockIdx B{};
        B.ln1 = ln(n + ".ln1");
        B.wq = visit(n + ".attn.wq", w(d, d));
        B.wk = visit(n + ".attn.wk", w(d, d));
        B.wv = visit(n + ".attn.wv", w(d, d));
        B.wo = visit(n + ".attn.wo", w(d, d, out_scale));
        B.bo = visit(n + ".attn.bo", zeros(d));
        if (cfg.fusion == Fusion::cross_attention) {
            CrossAttentionIdx& X = B.xattn;
            X.ln_x = ln(n + ".xattn.ln_x");
            X.ln_r = ln(n + ".xattn.ln_r");
            X.wq = visit(n + ".xattn.wq", w(d, d));
            for (int h = 0; h < cfg.n_heads; ++h) {
                const std::string hn = n + ".xattn.head" + std::to_string(h);
                const std::size_t r = static_cast<std::size_t>(cfg.sc_rate(h));
                X.sc.push_back(visit(hn + ".sc", w(r * d, d)));
                X.wk.push_back(visit(hn + ".wk", w(d, dh)));
                X.wv.push_back(visit(hn + ".wv", w(d, dh)));
                X.p.push_back(visit(hn + ".p", {dh, static_cast<std::size_t>(cfg.conv_width), Init::normal, 0.1}));
            }
            X.wo = visit(n + ".xattn.wo", w(d, d, out_scale));
            X.bo = visit(n + ".xattn.bo", zeros(d));
        } else if (cfg.fusion == Fusion::film) {
            B.film.wg = visit(n + ".film.wg", w(d, d, 0.1));
            B.film.bg = visit(n + ".film.bg", ones(d));
            B.film.wb = visit(n + ".film.wb", w(d, d, 0.1));
            B.film.bb = visit(n + ".film.bb", zeros(d));
        }
        B.ln3 = ln(n + ".ln3");
        B.ffn_w1 = visit(n + ".ffn.w1", w(d, hf));
        B.ffn_b1 = visit(n + ".ffn.b1", zeros(hf));
        B.ffn_w2 = visit(n + ".ffn.w2", w(hf, d, out_scale));
        B.ffn_b2 = visit(n + ".ffn.b2", zeros(d));
        L.blocks.push_back(std::move(B));
    }
    L.ln_f = ln("ln_f");
    L.head_w = visit("head.w", w(d, kMaxStateDim, 0.1));
    L.head_b = visit("head.b", zeros(kMaxStateDim));
    return L;
}

}  // namespace

GeneratorParams::GeneratorParams(const GeneratorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    layout_ = walk(cfg_, [&](const std::string& name, ParamSpec s) {
        Tensor t = Tensor::matrix(s.rows, s.cols);
        if (s.init == Init::one) {
            t.fill(1.0);
        } else if (s.init == Init::normal) {
            Rng rng(derive_seed(seed, name));
            for (double& v : t.values()) v = s.std * rng.normal();
        }
        return store_.add(name, std::move(t));
    });
}

GeneratorParams::GeneratorParams(const GeneratorConfig& cfg, ParamStore store) : cfg_(cfg), store_(std::move(store)) {
    cfg_.validate();
    std::size_t expected = 0;
    layout_ = walk(cfg_, [&](const std::string& name, ParamSpec s) {
        if (!store_.contains(name)) throw CorruptCheckpoint("missing parameter " + name);
        const std::size_t i = store_.index(name);
        if (i != expected) throw CorruptCheckpoint("parameter " + name + " out of order");
        const Tensor& t = store_[i];
        if (t.rows() != s.rows || t.cols() != s.cols) throw CorruptCheckpoint("parameter " + name + " has wrong shape");
        ++expected;
        return i;
    });
    if (expected != store_.size()) throw CorruptCheckpoint("unexpected extra parameters");
}

bool GeneratorParams::all_finite() const {
    for (const auto& t : store_.values())
        if (!t.all_finite()) return false;
    return true;
}

}  // namespace raea::gen
