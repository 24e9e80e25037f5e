// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include "raea/generator/model.hpp"
#include "raea/membank/bank.hpp"

namespace raea::train {

using gen::FeatureToken;
using gen::MainInput;
using gen::RetrievedFragment;

struct SampleRef {
    std::size_t episode = 0;
    std::size_t t = 0;
};

std::vector<FeatureToken> feature_tokens(const std::vector<env::Payload>& payloads, const enc::EncoderParams& enc);

MainInput make_main_input(const std::vector<env::Payload>& instruction, const std::vector<env::Payload>& observation,
                          std::vector<double> proprio, const enc::EncoderParams& enc);

/// Retrieval hits paired with the bank's fragments and cached features.
std::vector<RetrievedFragment> resolve(const bank::MemoryBank& bank, const bank::RetrievalResult& hits);

/// Query for step t under the bank's timing rule: the episode's first frame
/// with its instruction, or with per-step retrieval the observation of
/// frame t alone once t > 0.
enc::Query timed_query(const env::Episode& ep, std::size_t t, const bank::ModalitySet& modalities, bool per_step);

/// Training demonstrations with the generator's main-input features
/// precomputed (the encoders are frozen).
class Dataset {
public:
    Dataset(std::vector<env::Episode> episodes, const enc::EncoderParams& enc, bank::ModalitySet modalities);

    std::size_t size() const noexcept { return refs_.size(); }
    std::size_t episode_count() const noexcept { return episodes_.size(); }
    SampleRef ref(std::size_t i) const { return refs_.at(i); }
    const env::Episode& episode(std::size_t i) const { return episodes_.at(i); }
    const std::vector<env::Episode>& episodes() const noexcept { return episodes_; }
    const bank::ModalitySet& modalities() const noexcept { return modalities_; }

    MainInput main_input(SampleRef r) const;
    const std::vector<double>& target(SampleRef r) const;
    std::set<std::string> episode_ids() const;

private:
    std::vector<env::Episode> episodes_;
    bank::ModalitySet modalities_;
    std::vector<SampleRef> refs_;
    std::vector<std::vector<FeatureToken>> instruction_;
    std::vector<std::vector<std::vector<FeatureToken>>> observation_;
};

/// Throws LeakageError when any bank fragment comes from a training episode.
void check_disjoint(const Dataset& data, const bank::MemoryBank& bank);

}  // namespace raea::train
