// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "raea/envsim/render.hpp"
#include "raea/generator/config.hpp"
#include "raea/tensor/params.hpp"

namespace raea::gen {

using tensor::ParamStore;

inline constexpr std::size_t kModalityCount = 6;

/// Store indices of one two-layer MLP (9 -> hidden -> d_model, tanh).
struct MlpIdx {
    std::size_t w1, b1, w2, b2;
};

struct LayerNormIdx {
    std::size_t gamma, beta;
};

struct CrossAttentionIdx {
    LayerNormIdx ln_x, ln_r;
    std::size_t wq;
    std::vector<std::size_t> sc, wk, wv, p;  // one per head
    std::size_t wo, bo;
};

struct FilmIdx {
    std::size_t wg, bg, wb, bb;
};

struct BlockIdx {
    LayerNormIdx ln1;
    std::size_t wq, wk, wv, wo, bo;
    CrossAttentionIdx xattn;  // valid for cross_attention fusion
    FilmIdx film;             // valid for film fusion
    LayerNormIdx ln3;
    std::size_t ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct ParamLayout {
    MlpIdx action_enc, proprio_enc;
    std::array<std::size_t, kModalityCount> adapter_w{}, adapter_b{};  // by Modality
    std::size_t state_sep, policy_sep, readout, positions;
    std::vector<BlockIdx> blocks;
    LayerNormIdx ln_f;
    std::size_t head_w, head_b;
};

/// Every trainable tensor of the policy generator. Parameters exist only for
/// the configured fusion mode; each tensor is initialised from a stream keyed
/// by its name, so tensors shared between configurations start identical.
class GeneratorParams {
public:
    GeneratorParams(const GeneratorConfig& cfg, std::uint64_t seed);
    /// Adopts loaded tensors; names and shapes must match the config.
    GeneratorParams(const GeneratorConfig& cfg, ParamStore store);

    const GeneratorConfig& config() const noexcept { return cfg_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    ParamStore& store() noexcept { return store_; }
    const ParamStore& store() const noexcept { return store_; }
    bool all_finite() const;

private:
    GeneratorConfig cfg_;
    ParamStore store_;
    ParamLayout layout_;
};

}  // namespace raea::gen
