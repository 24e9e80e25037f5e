// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "raea/generator/params.hpp"
#include "raea/membank/fragment.hpp"
#include "raea/tensor/ops.hpp"

namespace raea::gen {

using tensor::ParamBinding;
using tensor::Var;

enum class TokenKind { instr, obs, action, proprio, state_sep, policy_sep, readout };

std::string_view to_string(TokenKind k);

/// n x d_model token matrix plus a kind tag per row. An empty sequence has no
/// tensor. Positions, once added, are 0..n-1 in row order (shifted by
/// `position_offset` when the sequence follows another one).
struct TokenSequence {
    Var tokens;
    std::vector<TokenKind> kinds;
    std::size_t position_offset = 0;
    bool positioned = false;

    std::size_t size() const noexcept { return kinds.size(); }
    bool empty() const noexcept { return kinds.empty(); }
};

/// A retriever-side modality projection reused as a generator input.
struct FeatureToken {
    env::Modality modality = env::Modality::text;
    std::vector<double> values;
};

struct MainInput {
    std::vector<FeatureToken> instruction;
    std::vector<FeatureToken> observation;
    std::vector<double> proprio;
};

/// One retrieved memory unit with its cached per-payload features
/// (instruction payloads first, then observation payloads).
struct RetrievedFragment {
    int id = -1;
    double score = 0.0;
    const bank::PolicyFragment* fragment = nullptr;
    const std::vector<std::vector<double>>* features = nullptr;
};

enum class StateKind { action, proprio };

/// Zero-pads each row to nine entries and maps it through the action or
/// proprioception MLP: one token per row. Throws CapViolation past nine.
Var encode_state_tokens(ParamBinding& pb, const GeneratorParams& params, const std::vector<std::vector<double>>& vecs,
                        StateKind which);

/// Feature tokens mapped to d_model by the per-modality adapter.
Var encode_feature_tokens(ParamBinding& pb, const GeneratorParams& params, const std::vector<FeatureToken>& feats);

/// [instr][obs][action x L][state_sep][proprio x L]; status segments are
/// omitted according to the config's status_tokens. No positions.
TokenSequence tokenize_fragment(ParamBinding& pb, const GeneratorParams& params, const bank::PolicyFragment& f,
                                const std::vector<std::vector<double>>& features);

/// Fragments ordered by score (descending, lower id first on ties), joined
/// with one policy_sep between consecutive blocks, positions added.
TokenSequence assemble_retrieved_context(ParamBinding& pb, const GeneratorParams& params,
                                         std::vector<RetrievedFragment> fragments);

/// [instr][obs][proprio][readout]. No positions.
TokenSequence tokenize_main(ParamBinding& pb, const GeneratorParams& params, const MainInput& in);

/// Adds rows offset..offset+n-1 of the position table.
TokenSequence add_positions(ParamBinding& pb, const GeneratorParams& params, TokenSequence seq,
                            std::size_t offset = 0);

/// F_r prepended to F_x (both positioned consecutively); returns the joined
/// sequence and stores the readout row index in `readout`.
TokenSequence concat_fusion(const TokenSequence& fx, const TokenSequence& fr, std::size_t& readout);

std::size_t readout_index(const TokenSequence& seq);

}  // namespace raea::gen
