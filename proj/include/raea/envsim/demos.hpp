// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "raea/envsim/render.hpp"
#include "raea/envsim/world.hpp"

namespace raea::env {

struct EpisodeStep {
    std::vector<double> state_vec;
    std::vector<double> image;
    std::vector<double> point_cloud;
    std::vector<double> proprio;
    std::vector<double> action;
    friend bool operator==(const EpisodeStep&, const EpisodeStep&) = default;
};

struct Episode {
    std::string id;
    TaskSpec task;
    EmbodimentSpec embodiment;
    std::uint64_t seed = 0;
    std::vector<EpisodeStep> steps;
    bool success = false;

    /// Observation payload at step t; video clips end at frame t.
    Payload observation(std::size_t t, Modality m) const;
    Payload instruction(Modality m) const;
};

std::string episode_id(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed);

/// Runs the scripted expert from make_env(task, embodiment, seed) until done.
Episode run_expert_episode(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed);

/// n successful expert episodes using env seeds seed, seed+1, ...; a failed
/// episode is dropped and the next seed is tried.
std::vector<Episode> generate_demos(const TaskSpec& task, const EmbodimentSpec& embodiment, int n,
                                    std::uint64_t seed);

/// Like generate_demos, but episode j uses instruction template j % kTemplatesPerTask.
std::vector<Episode> generate_demo_set(const TaskSpec& task, const EmbodimentSpec& embodiment, int n,
                                      std::uint64_t seed);

nlohmann::json episode_to_json(const Episode& e);
Episode episode_from_json(const nlohmann::json& j);

/// One episode per line. `config_hash`, when non-empty, is stored on each line.
std::string serialize_demos(const std::vector<Episode>& episodes, const std::string& config_hash = "");
std::vector<Episode> parse_demos(const std::string& text);
void save_demos(const std::filesystem::path& path, const std::vector<Episode>& episodes,
                const std::string& config_hash = "");
std::vector<Episode> load_demos(const std::filesystem::path& path);

}  // namespace raea::env
