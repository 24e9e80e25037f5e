// SPDX-License-Identifier: Apache-2.0
#include "raea/trainer/dataset.hpp"

#include "raea/common/error.hpp"

namespace raea::train {

std::vector<FeatureToken> feature_tokens(const std::vector<env::Payload>& payloads, const enc::EncoderParams& enc) {
    std::vector<FeatureToken> out;
    out.reserve(payloads.size());
    for (const auto& p : payloads) out.push_back({p.modality, enc::encode_modality(p, enc)});
    return out;
}

MainInput make_main_input(const std::vector<env::Payload>& instruction, const std::vector<env::Payload>& observation,
                          std::vector<double> proprio, const enc::EncoderParams& enc) {
    MainInput in;
    in.instruction = feature_tokens(instruction, enc);
    in.observation = feature_tokens(observation, enc);
    in.proprio = std::move(proprio);
    return in;
}

std::vector<RetrievedFragment> resolve(const bank::MemoryBank& bank, const bank::RetrievalResult& hits) {
    std::vector<RetrievedFragment> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back({h.id, h.score, &bank.fragment(h.id), &bank.features(h.id)});
    return out;
}

enc::Query timed_query(const env::Episode& ep, std::size_t t, const bank::ModalitySet& modalities, bool per_step) {
    if (per_step && t > 0) return bank::make_query(ep, t, modalities, false);
    return bank::make_query(ep, 0, modalities, true);
}

Dataset::Dataset(std::vector<env::Episode> episodes, const enc::EncoderParams& enc, bank::ModalitySet modalities)
    : episodes_(std::move(episodes)), modalities_(std::move(modalities)) {
    for (std::size_t e = 0; e < episodes_.size(); ++e) {
        const env::Episode& ep = episodes_[e];
        if (ep.steps.empty()) throw ConfigError("training episode " + ep.id + " has no steps");
        std::vector<env::Payload> instr;
        for (auto m : modalities_.instruction) instr.push_back(ep.instruction(m));
        instruction_.push_back(feature_tokens(instr, enc));
        std::vector<std::vector<FeatureToken>> per_step;
        for (std::size_t t = 0; t < ep.steps.size(); ++t) {
            std::vector<env::Payload> obs;
            for (auto m : modalities_.observation) obs.push_back(ep.observation(t, m));
            per_step.push_back(feature_tokens(obs, enc));
            refs_.push_back({e, t});
        }
        observation_.push_back(std::move(per_step));
    }
}

MainInput Dataset::main_input(SampleRef r) const {
    MainInput in;
    in.instruction = instruction_.at(r.episode);
    in.observation = observation_.at(r.episode).at(r.t);
    in.proprio = episodes_[r.episode].steps[r.t].proprio;
    return in;
}

const std::vector<double>& Dataset::target(SampleRef r) const { return episodes_.at(r.episode).steps.at(r.t).action; }

std::set<std::string> Dataset::episode_ids() const {
    std::set<std::string> ids;
    for (const auto& ep : episodes_) ids.insert(ep.id);
    return ids;
}

void check_disjoint(const Dataset& data, const bank::MemoryBank& bank) {
    const auto ids = data.episode_ids();
    for (const auto& id : bank.episode_ids()) {
        if (ids.count(id)) throw LeakageError("memory bank contains training episode " + id);
    }
}

}  // namespace raea::train
