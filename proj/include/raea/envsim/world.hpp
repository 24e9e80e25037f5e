// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "raea/envsim/vocab.hpp"

namespace raea::env {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

struct Object {
    int id = 0;
    Color color = Color::red;
    Shape shape = Shape::circle;
    Vec2 pos;
    bool held = false;
    friend bool operator==(const Object&, const Object&) = default;
};

struct GoalRegion {
    Vec2 center;
    double radius = 0.08;
    friend bool operator==(const GoalRegion&, const GoalRegion&) = default;
};

struct WorldState {
    Vec2 gripper;
    bool grip_closed = false;
    std::vector<Object> objects;  // ordered by id
    GoalRegion goal;
    int step_count = 0;
    friend bool operator==(const WorldState&, const WorldState&) = default;

    const Object* held_object() const;
};

struct TaskSpec {
    TaskKind kind = TaskKind::reach;
    Color color = Color::red;
    Shape shape = Shape::circle;  // ignored by sort, which targets every object of `color`
    int template_index = 0;
    std::vector<int> instruction_tokens;
    int horizon = 60;
    double success_tol = 0.05;
};

TaskSpec make_task(TaskKind kind, Color color, Shape shape, int template_index = 0);

/// "<kind>:<color>:<shape>" e.g. "reach:red:circle"; sort accepts "sort:red".
TaskSpec parse_task(const std::string& text, int template_index = 0);
std::string task_name(const TaskSpec& task);

struct EmbodimentSpec {
    std::string id;
    int action_dim = 4;
    double max_step = 0.1;
    int proprio_dim = 4;
    friend bool operator==(const EmbodimentSpec&, const EmbodimentSpec&) = default;

    bool has_gripper() const { return action_dim >= 3; }
};

const std::vector<EmbodimentSpec>& builtin_embodiments();
const EmbodimentSpec& find_embodiment(const std::string& id);

inline constexpr int kMaxObjects = 4;
inline constexpr double kContactRadius = 0.04;
inline constexpr double kGripThreshold = 0.5;

/// Spawn position centre for a (color, shape) pair. Objects of a given
/// identity always appear near the same spot, so demonstrations of one
/// object carry information about where that object is found.
Vec2 identity_anchor(Color color, Shape shape);

WorldState make_env(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed);

struct StepResult {
    WorldState state;
    bool done = false;
    bool success = false;
};

/// Advances the world by one action. The first two dims move the gripper,
/// the third (if present) closes the grip when > 0.5 and opens it when
/// < -0.5, remaining dims are ignored.
StepResult step(const WorldState& state, const TaskSpec& task, const EmbodimentSpec& embodiment,
                std::span<const double> action);

bool is_success(const WorldState& state, const TaskSpec& task);

/// Proprioception: x, y, grip, held, then smooth functions of the position,
/// truncated to the embodiment's proprio_dim.
std::vector<double> proprio(const WorldState& state, const EmbodimentSpec& embodiment);

}  // namespace raea::env
