// SPDX-License-Identifier: Apache-2.0
#include "raea/envsim/demos.hpp"

#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"
#include "raea/envsim/expert.hpp"

namespace raea::env {

using nlohmann::json;

namespace {

constexpr int kMaxRegenerations = 1000;

}  // namespace

Payload Episode::observation(std::size_t t, Modality m) const {
    if (t >= steps.size()) throw DimensionError("step " + std::to_string(t) + " out of range in " + id);
    const EpisodeStep& s = steps[t];
    Payload p;
    p.modality = m;
    switch (m) {
        case Modality::state_vec: p.values = s.state_vec; break;
        case Modality::image_grid: p.values = s.image; break;
        case Modality::point_cloud: p.values = s.point_cloud; break;
        case Modality::video_clip: {
            std::vector<std::vector<double>> frames;
            const std::size_t first = t + 1 >= kVideoFrames ? t + 1 - kVideoFrames : 0;
            for (std::size_t k = first; k <= t; ++k) frames.push_back(steps[k].image);
            return video_payload(frames);
        }
        default: throw ConfigError("'" + std::string(to_string(m)) + "' is not an observation modality");
    }
    return p;
}

Payload Episode::instruction(Modality m) const { return instruction_payload(task.instruction_tokens, m); }

std::string episode_id(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed) {
    return task_name(task) + "/t" + std::to_string(task.template_index) + "/" + embodiment.id + "/" +
           std::to_string(seed);
}

Episode run_expert_episode(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed) {
    if (!embodiment.has_gripper() && (task.kind == TaskKind::pick_place || task.kind == TaskKind::sort)) {
        throw ConfigError("embodiment '" + embodiment.id + "' has no gripper for " + task_name(task));
    }
    Episode ep;
    ep.id = episode_id(task, embodiment, seed);
    ep.task = task;
    ep.embodiment = embodiment;
    ep.seed = seed;
    WorldState s = make_env(task, embodiment, seed);
    for (int t = 0; t < task.horizon; ++t) {
        EpisodeStep st;
        st.state_vec = render_state_vec(s);
        st.image = render_image(s);
        st.point_cloud = render_point_cloud(s);
        st.proprio = proprio(s, embodiment);
        st.action = scripted_expert(s, task, embodiment);
        StepResult r = step(s, task, embodiment, st.action);
        ep.steps.push_back(std::move(st));
        s = std::move(r.state);
        if (r.done) {
            ep.success = r.success;
            break;
        }
    }
    return ep;
}

std::vector<Episode> generate_demos(const TaskSpec& task, const EmbodimentSpec& embodiment, int n,
                                    std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate_demos needs n >= 1");
    std::vector<Episode> out;
    int failures = 0;
    for (std::uint64_t s = seed; static_cast<int>(out.size()) < n; ++s) {
        Episode ep = run_expert_episode(task, embodiment, s);
        if (ep.success) {
            out.push_back(std::move(ep));
        } else if (++failures > kMaxRegenerations) {
            throw ConfigError("expert keeps failing on " + task_name(task));
        }
    }
    return out;
}

std::vector<Episode> generate_demo_set(const TaskSpec& task, const EmbodimentSpec& embodiment, int n,
                                      std::uint64_t seed) {
    if (n < 1) throw ConfigError("generate_demo_set needs n >= 1");
    std::vector<Episode> out;
    int failures = 0;
    std::uint64_t s = seed;
    for (int j = 0; j < n; ++j) {
        const TaskSpec tj = make_task(task.kind, task.color, task.shape, j % kTemplatesPerTask);
        for (;; ++s) {
            Episode ep = run_expert_episode(tj, embodiment, s);
            if (ep.success) {
                out.push_back(std::move(ep));
                ++s;
                break;
            }
            if (++failures > kMaxRegenerations) throw ConfigError("expert keeps failing on " + task_name(task));
        }
    }
    return out;
}

json episode_to_json(const Episode& e) {
    json steps = json::array();
    for (const auto& s : e.steps) {
        steps.push_back({{"obs", {{"state_vec", s.state_vec}, {"image_grid", s.image}, {"point_cloud", s.point_cloud}}},
                         {"proprio", s.proprio},
                         {"action", s.action}});
    }
    return {{"id", e.id},
            {"task",
             {{"kind", to_string(e.task.kind)},
              {"color", to_string(e.task.color)},
              {"shape", to_string(e.task.shape)},
              {"template", e.task.template_index},
              {"instruction_tokens", e.task.instruction_tokens},
              {"horizon", e.task.horizon},
              {"success_tol", e.task.success_tol}}},
            {"embodiment",
             {{"id", e.embodiment.id},
              {"action_dim", e.embodiment.action_dim},
              {"max_step", e.embodiment.max_step},
              {"proprio_dim", e.embodiment.proprio_dim}}},
            {"seed", e.seed},
            {"steps", std::move(steps)},
            {"success", e.success}};
}

Episode episode_from_json(const json& j) {
    try {
        Episode e;
        e.id = j.at("id").get<std::string>();
        const json& t = j.at("task");
        e.task.kind = parse_task_kind(t.at("kind").get<std::string>());
        e.task.color = parse_color(t.at("color").get<std::string>());
        e.task.shape = parse_shape(t.at("shape").get<std::string>());
        e.task.template_index = t.at("template").get<int>();
        e.task.instruction_tokens = t.at("instruction_tokens").get<std::vector<int>>();
        e.task.horizon = t.at("horizon").get<int>();
        e.task.success_tol = t.at("success_tol").get<double>();
        const json& em = j.at("embodiment");
        e.embodiment.id = em.at("id").get<std::string>();
        e.embodiment.action_dim = em.at("action_dim").get<int>();
        e.embodiment.max_step = em.at("max_step").get<double>();
        e.embodiment.proprio_dim = em.at("proprio_dim").get<int>();
        e.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("steps")) {
            EpisodeStep st;
            const json& o = s.at("obs");
            st.state_vec = o.at("state_vec").get<std::vector<double>>();
            st.image = o.at("image_grid").get<std::vector<double>>();
            st.point_cloud = o.at("point_cloud").get<std::vector<double>>();
            st.proprio = s.at("proprio").get<std::vector<double>>();
            st.action = s.at("action").get<std::vector<double>>();
            e.steps.push_back(std::move(st));
        }
        e.success = j.at("success").get<bool>();
        return e;
    } catch (const json::exception& ex) {
        throw CorruptDemos(std::string("malformed episode record: ") + ex.what());
    }
}

std::string serialize_demos(const std::vector<Episode>& episodes, const std::string& config_hash) {
    std::string out;
    for (const auto& e : episodes) {
        json j = episode_to_json(e);
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Episode> parse_demos(const std::string& text) {
    std::vector<Episode> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& ex) {
            throw CorruptDemos(std::string("demo file is not valid JSON lines: ") + ex.what());
        }
        out.push_back(episode_from_json(j));
    }
    return out;
}

void save_demos(const std::filesystem::path& path, const std::vector<Episode>& episodes,
                const std::string& config_hash) {
    atomic_write(path, serialize_demos(episodes, config_hash));
}

std::vector<Episode> load_demos(const std::filesystem::path& path) { return parse_demos(read_file(path)); }

}  // namespace raea::env
