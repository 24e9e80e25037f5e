// SPDX-License-Identifier: Apache-2.0
#include "raea/membank/fragment.hpp"

#include "raea/common/error.hpp"

namespace raea::bank {

using nlohmann::json;

std::vector<Payload> PolicyFragment::payloads() const {
    std::vector<Payload> out = instruction;
    out.insert(out.end(), observation.begin(), observation.end());
    return out;
}

std::vector<PolicyFragment> build_fragments(const std::vector<env::Episode>& episodes, int L, int stride,
                                            const ModalitySet& modalities) {
    if (L < 1 || L > kMaxFragmentLength) throw ConfigError("fragment length must lie in [1, 16]");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    std::vector<PolicyFragment> out;
    for (const auto& ep : episodes) {
        const int T = static_cast<int>(ep.steps.size());
        if (T == 0) continue;
        for (int s = 0;; s += stride) {
            PolicyFragment f;
            f.task = env::task_name(ep.task);
            f.embodiment_id = ep.embodiment.id;
            f.source = {ep.id, s};
            f.real_steps = std::min(L, T - s);
            for (Modality m : modalities.instruction) f.instruction.push_back(ep.instruction(m));
            for (Modality m : modalities.observation)
                f.observation.push_back(ep.observation(static_cast<std::size_t>(s), m));
            for (int i = 0; i < L; ++i) {
                const auto& st = ep.steps[static_cast<std::size_t>(std::min(s + i, T - 1))];
                f.actions.push_back(st.action);
                f.proprio.push_back(st.proprio);
            }
            out.push_back(std::move(f));
            if (s + L >= T) break;
        }
    }
    return out;
}

enc::Query make_query(const env::Episode& ep, std::size_t t, const ModalitySet& modalities, bool with_instruction) {
    enc::Query q;
    if (with_instruction)
        for (Modality m : modalities.instruction) q.instruction.push_back(ep.instruction(m));
    for (Modality m : modalities.observation) q.observation.push_back(ep.observation(t, m));
    return q;
}

json payload_to_json(const Payload& p) {
    json j{{"modality", env::to_string(p.modality)}};
    if (!p.tokens.empty() || env::is_instruction_modality(p.modality)) j["tokens"] = p.tokens;
    if (!p.values.empty()) j["values"] = p.values;
    return j;
}

Payload payload_from_json(const json& j) {
    Payload p;
    p.modality = env::parse_modality(j.at("modality").get<std::string>());
    if (j.contains("tokens")) p.tokens = j.at("tokens").get<std::vector<int>>();
    if (j.contains("values")) p.values = j.at("values").get<std::vector<double>>();
    return p;
}

json fragment_to_json(const PolicyFragment& f) {
    json instr = json::array();
    for (const auto& p : f.instruction) instr.push_back(payload_to_json(p));
    json obs = json::array();
    for (const auto& p : f.observation) obs.push_back(payload_to_json(p));
    return {{"id", f.id},
            {"task", f.task},
            {"embodiment", f.embodiment_id},
            {"source", {{"episode_id", f.source.episode_id}, {"start_frame", f.source.start_frame}}},
            {"real_steps", f.real_steps},
            {"instruction", std::move(instr)},
            {"observation", std::move(obs)},
            {"actions", f.actions},
            {"proprio", f.proprio}};
}

PolicyFragment fragment_from_json(const json& j) {
    PolicyFragment f;
    f.id = j.at("id").get<int>();
    f.task = j.at("task").get<std::string>();
    f.embodiment_id = j.at("embodiment").get<std::string>();
    f.source.episode_id = j.at("source").at("episode_id").get<std::string>();
    f.source.start_frame = j.at("source").at("start_frame").get<int>();
    f.real_steps = j.at("real_steps").get<int>();
    for (const auto& p : j.at("instruction")) f.instruction.push_back(payload_from_json(p));
    for (const auto& p : j.at("observation")) f.observation.push_back(payload_from_json(p));
    f.actions = j.at("actions").get<std::vector<std::vector<double>>>();
    f.proprio = j.at("proprio").get<std::vector<std::vector<double>>>();
    return f;
}

}  // namespace raea::bank
