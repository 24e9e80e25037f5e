// SPDX-License-Identifier: Apache-2.0
#include "raea/generator/tokenizer.hpp"

#include <algorithm>

#include "raea/common/error.hpp"

namespace raea::gen {

using tensor::Tensor;
namespace ops = tensor;

std::string_view to_string(TokenKind k) {
    switch (k) {
        case TokenKind::instr: return "instr";
        case TokenKind::obs: return "obs";
        case TokenKind::action: return "action";
        case TokenKind::proprio: return "proprio";
        case TokenKind::state_sep: return "state_sep";
        case TokenKind::policy_sep: return "policy_sep";
        case TokenKind::readout: return "readout";
    }
    return "?";
}

Var encode_state_tokens(ParamBinding& pb, const GeneratorParams& params, const std::vector<std::vector<double>>& vecs,
                        StateKind which) {
    if (vecs.empty()) throw DimensionError("encode_state_tokens: no rows");
    Tensor x = Tensor::matrix(vecs.size(), kMaxStateDim);
    for (std::size_t r = 0; r < vecs.size(); ++r) {
        if (vecs[r].size() > static_cast<std::size_t>(kMaxStateDim)) {
            throw CapViolation("state vector of width " + std::to_string(vecs[r].size()) + " exceeds the cap of 9");
        }
        std::copy(vecs[r].begin(), vecs[r].end(), x.row_span(r).begin());
    }
    const MlpIdx& m = which == StateKind::action ? params.layout().action_enc : params.layout().proprio_enc;
    Var h = ops::tanh(ops::linear(pb.tape().constant(std::move(x)), pb[m.w1], pb[m.b1]));
    return ops::linear(h, pb[m.w2], pb[m.b2]);
}

Var encode_feature_tokens(ParamBinding& pb, const GeneratorParams& params, const std::vector<FeatureToken>& feats) {
    std::vector<Var> rows;
    rows.reserve(feats.size());
    for (const auto& f : feats) {
        if (static_cast<int>(f.values.size()) != params.config().feature_dim) {
            throw DimensionError("feature token has width " + std::to_string(f.values.size()));
        }
        const std::size_t m = static_cast<std::size_t>(f.modality);
        Var x = pb.tape().constant(Tensor::row(f.values));
        rows.push_back(ops::linear(x, pb[params.layout().adapter_w[m]], pb[params.layout().adapter_b[m]]));
    }
    return rows.size() == 1 ? rows.front() : ops::concat_rows(rows);
}

TokenSequence tokenize_fragment(ParamBinding& pb, const GeneratorParams& params, const bank::PolicyFragment& f,
                                const std::vector<std::vector<double>>& features) {
    const std::size_t ni = f.instruction.size();
    const std::size_t no = f.observation.size();
    if (features.size() != ni + no) throw DimensionError("fragment features do not match its payloads");
    if (f.action_dim() > kMaxStateDim || f.proprio_dim() > kMaxStateDim) {
        throw CapViolation("fragment state width exceeds the cap of 9");
    }

    TokenSequence seq;
    std::vector<Var> parts;
    std::vector<FeatureToken> feats;
    for (std::size_t i = 0; i < ni + no; ++i) {
        const env::Payload& p = i < ni ? f.instruction[i] : f.observation[i - ni];
        feats.push_back({p.modality, features[i]});
        seq.kinds.push_back(i < ni ? TokenKind::instr : TokenKind::obs);
    }
    if (!feats.empty()) parts.push_back(encode_feature_tokens(pb, params, feats));

    const StatusTokens status = params.config().status_tokens;
    if (status != StatusTokens::no_action_proprio) {
        parts.push_back(encode_state_tokens(pb, params, f.actions, StateKind::action));
        seq.kinds.insert(seq.kinds.end(), f.actions.size(), TokenKind::action);
    }
    if (status == StatusTokens::all) {
        parts.push_back(pb[params.layout().state_sep]);
        seq.kinds.push_back(TokenKind::state_sep);
        parts.push_back(encode_state_tokens(pb, params, f.proprio, StateKind::proprio));
        seq.kinds.insert(seq.kinds.end(), f.proprio.size(), TokenKind::proprio);
    }
    if (parts.empty()) return seq;
    seq.tokens = parts.size() == 1 ? parts.front() : ops::concat_rows(parts);
    return seq;
}

TokenSequence assemble_retrieved_context(ParamBinding& pb, const GeneratorParams& params,
                                         std::vector<RetrievedFragment> fragments) {
    std::stable_sort(fragments.begin(), fragments.end(), [](const RetrievedFragment& a, const RetrievedFragment& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    TokenSequence out;
    std::vector<Var> parts;
    for (const auto& rf : fragments) {
        if (!rf.fragment || !rf.features) throw DimensionError("retrieved fragment without data");
        TokenSequence block = tokenize_fragment(pb, params, *rf.fragment, *rf.features);
        if (block.empty()) continue;
        if (!parts.empty()) {
            parts.push_back(pb[params.layout().policy_sep]);
            out.kinds.push_back(TokenKind::policy_sep);
        }
        parts.push_back(block.tokens);
        out.kinds.insert(out.kinds.end(), block.kinds.begin(), block.kinds.end());
    }
    if (parts.empty()) return out;
    out.tokens = parts.size() == 1 ? parts.front() : ops::concat_rows(parts);
    return add_positions(pb, params, std::move(out), 0);
}

TokenSequence tokenize_main(ParamBinding& pb, const GeneratorParams& params, const MainInput& in) {
    TokenSequence seq;
    std::vector<Var> parts;
    std::vector<FeatureToken> feats = in.instruction;
    feats.insert(feats.end(), in.observation.begin(), in.observation.end());
    seq.kinds.insert(seq.kinds.end(), in.instruction.size(), TokenKind::instr);
    seq.kinds.insert(seq.kinds.end(), in.observation.size(), TokenKind::obs);
    if (!feats.empty()) parts.push_back(encode_feature_tokens(pb, params, feats));
    parts.push_back(encode_state_tokens(pb, params, {in.proprio}, StateKind::proprio));
    seq.kinds.push_back(TokenKind::proprio);
    parts.push_back(pb[params.layout().readout]);
    seq.kinds.push_back(TokenKind::readout);
    seq.tokens = ops::concat_rows(parts);
    return seq;
}

TokenSequence add_positions(ParamBinding& pb, const GeneratorParams& params, TokenSequence seq, std::size_t offset) {
    if (seq.empty()) return seq;
    if (seq.positioned) throw DimensionError("sequence already has positions");
    if (offset + seq.size() > kMaxPositions) {
        throw DimensionError("sequence of " + std::to_string(offset + seq.size()) + " tokens exceeds the position table");
    }
    Var pos = ops::slice_rows(pb[params.layout().positions], offset, seq.size());
    seq.tokens = ops::add(seq.tokens, pos);
    seq.position_offset = offset;
    seq.positioned = true;
    return seq;
}

TokenSequence concat_fusion(const TokenSequence& fx, const TokenSequence& fr, std::size_t& readout) {
    if (fr.empty()) {
        readout = readout_index(fx);
        return fx;
    }
    TokenSequence out;
    out.tokens = ops::concat_rows({fr.tokens, fx.tokens});
    out.kinds = fr.kinds;
    out.kinds.insert(out.kinds.end(), fx.kinds.begin(), fx.kinds.end());
    out.position_offset = fr.position_offset;
    out.positioned = fr.positioned && fx.positioned;
    readout = fr.size() + readout_index(fx);
    return out;
}

std::size_t readout_index(const TokenSequence& seq) {
    std::size_t found = seq.size();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq.kinds[i] != TokenKind::readout) continue;
        if (found != seq.size()) throw DimensionError("sequence has more than one readout token");
        found = i;
    }
    if (found == seq.size()) throw DimensionError("sequence has no readout token");
    return found;
}

}  // namespace raea::gen
