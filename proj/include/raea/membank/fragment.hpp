// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "raea/encoders/encoders.hpp"
#include "raea/envsim/demos.hpp"

namespace raea::bank {

using enc::Modality;
using enc::Payload;

inline constexpr int kMaxStateDim = 9;
inline constexpr int kMaxFragmentLength = 16;

struct ModalitySet {
    std::vector<Modality> instruction{Modality::text};
    std::vector<Modality> observation{Modality::state_vec, Modality::image_grid};
    friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

struct FragmentSource {
    std::string episode_id;
    int start_frame = 0;
    friend bool operator==(const FragmentSource&, const FragmentSource&) = default;
};

/// One memory unit: the episode instruction, the observation payloads of
/// the window's first frame, and L steps of actions and proprioception.
/// Windows that run past the episode end repeat its last step.
struct PolicyFragment {
    int id = -1;
    std::string task;
    std::string embodiment_id;
    FragmentSource source;
    int real_steps = 0;
    std::vector<Payload> instruction;
    std::vector<Payload> observation;
    std::vector<std::vector<double>> actions;
    std::vector<std::vector<double>> proprio;
    friend bool operator==(const PolicyFragment&, const PolicyFragment&) = default;

    int length() const { return static_cast<int>(actions.size()); }
    int action_dim() const { return actions.empty() ? 0 : static_cast<int>(actions.front().size()); }
    int proprio_dim() const { return proprio.empty() ? 0 : static_cast<int>(proprio.front().size()); }
    /// Instruction payloads followed by observation payloads.
    std::vector<Payload> payloads() const;
};

/// Sliding windows of length L every `stride` frames, from frame 0 until a
/// window reaches the episode end.
std::vector<PolicyFragment> build_fragments(const std::vector<env::Episode>& episodes, int L, int stride,
                                            const ModalitySet& modalities = {});

/// Retrieval query for frame t of an episode. Without the instruction only
/// observation payloads are used.
enc::Query make_query(const env::Episode& ep, std::size_t t, const ModalitySet& modalities,
                      bool with_instruction = true);

nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);
nlohmann::json fragment_to_json(const PolicyFragment& f);
PolicyFragment fragment_from_json(const nlohmann::json& j);

}  // namespace raea::bank
