// SPDX-License-Identifier: Apache-2.0
#include "raea/envsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"

namespace raea::env {

namespace {

constexpr double kAnchorJitter = 0.02;
constexpr double kHomeJitter = 0.05;
constexpr Vec2 kHome{0.5, 0.45};
constexpr Vec2 kGoalCenter{0.5, 0.92};
constexpr double kGoalRadius = 0.08;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

const Object* WorldState::held_object() const {
    for (const auto& o : objects)
        if (o.held) return &o;
    return nullptr;
}

TaskSpec make_task(TaskKind kind, Color color, Shape shape, int template_index) {
    TaskSpec t;
    t.kind = kind;
    t.color = color;
    t.shape = shape;
    t.template_index = template_index;
    t.instruction_tokens = instruction_tokens(kind, color, shape, template_index);
    return t;
}

TaskSpec parse_task(const std::string& text, int template_index) {
    auto parts = split(text, ':');
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("bad task '" + text + "'");
    TaskKind kind = parse_task_kind(parts[0]);
    Color color = parse_color(parts[1]);
    Shape shape = Shape::circle;
    if (parts.size() == 3) {
        shape = parse_shape(parts[2]);
    } else if (kind != TaskKind::sort) {
        throw ConfigError("task '" + text + "' needs a shape");
    }
    return make_task(kind, color, shape, template_index);
}

std::string task_name(const TaskSpec& task) {
    std::string s = std::string(to_string(task.kind)) + ":" + std::string(to_string(task.color));
    if (task.kind != TaskKind::sort) s += ":" + std::string(to_string(task.shape));
    return s;
}

const std::vector<EmbodimentSpec>& builtin_embodiments() {
    static const std::vector<EmbodimentSpec> list{
        {"franka", 4, 0.10, 4},
        {"ur5", 7, 0.08, 7},
        {"widowx", 3, 0.12, 3},
        {"kinova", 9, 0.10, 9},
        {"pointbot", 2, 0.10, 2},
    };
    return list;
}

const EmbodimentSpec& find_embodiment(const std::string& id) {
    for (const auto& e : builtin_embodiments())
        if (e.id == id) return e;
    throw ConfigError("unknown embodiment '" + id + "'");
}

Vec2 identity_anchor(Color color, Shape shape) {
    const int combo = static_cast<int>(color) * 3 + static_cast<int>(shape);
    const int col = combo % 4;
    const int row = combo / 4;
    return {0.14 + 0.24 * col, 0.2 + 0.25 * row};
}

WorldState make_env(const TaskSpec& task, const EmbodimentSpec& embodiment, std::uint64_t seed) {
    if (embodiment.action_dim < 2 || embodiment.action_dim > 9 || embodiment.proprio_dim < 2 ||
        embodiment.proprio_dim > 9) {
        throw CapViolation("embodiment '" + embodiment.id + "' dims outside [2,9]");
    }
    Rng rng(derive_seed(seed, "world"));

    std::vector<std::pair<Color, Shape>> idents;
    auto pick_other = [&](auto accept) {
        std::vector<std::pair<Color, Shape>> pool;
        for (Color c : kColors)
            for (Shape s : kShapes) {
                std::pair<Color, Shape> p{c, s};
                if (accept(p) && std::find(idents.begin(), idents.end(), p) == idents.end()) pool.push_back(p);
            }
        idents.push_back(pool[rng.index(pool.size())]);
    };

    if (task.kind == TaskKind::sort) {
        pick_other([&](auto p) { return p.first == task.color; });
        pick_other([&](auto p) { return p.first == task.color; });
        pick_other([&](auto p) { return p.first != task.color; });
    } else {
        idents.emplace_back(task.color, task.shape);
        pick_other([](auto) { return true; });
        pick_other([](auto) { return true; });
    }

    std::vector<int> ids(idents.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);

    WorldState s;
    s.gripper = {kHome.x + rng.uniform(-kHomeJitter, kHomeJitter), kHome.y + rng.uniform(-kHomeJitter, kHomeJitter)};
    s.goal = {kGoalCenter, kGoalRadius};
    for (std::size_t i = 0; i < idents.size(); ++i) {
        Object o;
        o.id = ids[i];
        o.color = idents[i].first;
        o.shape = idents[i].second;
        Vec2 a = identity_anchor(o.color, o.shape);
        o.pos = {a.x + rng.uniform(-kAnchorJitter, kAnchorJitter), a.y + rng.uniform(-kAnchorJitter, kAnchorJitter)};
        s.objects.push_back(o);
    }
    std::sort(s.objects.begin(), s.objects.end(), [](const Object& a, const Object& b) { return a.id < b.id; });
    return s;
}

StepResult step(const WorldState& state, const TaskSpec& task, const EmbodimentSpec& embodiment,
                std::span<const double> action) {
    if (static_cast<int>(action.size()) != embodiment.action_dim) {
        throw DimensionError("action has " + std::to_string(action.size()) + " dims, embodiment '" + embodiment.id +
                             "' expects " + std::to_string(embodiment.action_dim));
    }
    StepResult r;
    WorldState& s = r.state;
    s = state;
    const Vec2 old = s.gripper;

    if (action.size() >= 3) {
        const double g = action[2];
        if (g > kGripThreshold && !s.grip_closed) {
            s.grip_closed = true;
            Object* best = nullptr;
            double best_d = kContactRadius;
            for (auto& o : s.objects) {
                const double d = distance(o.pos, old);
                if (d < best_d) {
                    best_d = d;
                    best = &o;
                }
            }
            if (best) best->held = true;
        } else if (g < -kGripThreshold && s.grip_closed) {
            s.grip_closed = false;
            for (auto& o : s.objects) o.held = false;
        }
    }

    const double dx = std::clamp(action[0], -embodiment.max_step, embodiment.max_step);
    const double dy = std::clamp(action[1], -embodiment.max_step, embodiment.max_step);
    s.gripper = {clamp01(old.x + dx), clamp01(old.y + dy)};
    const Vec2 delta{s.gripper.x - old.x, s.gripper.y - old.y};

    for (auto& o : s.objects) {
        if (o.held) {
            o.pos = s.gripper;
            continue;
        }
        const Vec2 rel{o.pos.x - old.x, o.pos.y - old.y};
        if (distance(o.pos, old) < kContactRadius && rel.x * delta.x + rel.y * delta.y > 0.0) {
            o.pos = {clamp01(o.pos.x + delta.x), clamp01(o.pos.y + delta.y)};
        }
    }

    s.step_count = state.step_count + 1;
    r.success = is_success(s, task);
    r.done = r.success || s.step_count >= task.horizon;
    return r;
}

bool is_success(const WorldState& state, const TaskSpec& task) {
    switch (task.kind) {
        case TaskKind::reach:
            for (const auto& o : state.objects)
                if (o.color == task.color && o.shape == task.shape &&
                    distance(state.gripper, o.pos) <= task.success_tol)
                    return true;
            return false;
        case TaskKind::push:
        case TaskKind::pick_place:
            for (const auto& o : state.objects)
                if (o.color == task.color && o.shape == task.shape && !o.held &&
                    distance(o.pos, state.goal.center) <= task.success_tol)
                    return true;
            return false;
        case TaskKind::sort: {
            bool any = false;
            for (const auto& o : state.objects) {
                if (o.color != task.color) continue;
                any = true;
                if (o.held || distance(o.pos, state.goal.center) > state.goal.radius) return false;
            }
            return any;
        }
    }
    return false;
}

std::vector<double> proprio(const WorldState& state, const EmbodimentSpec& embodiment) {
    const double x = state.gripper.x;
    const double y = state.gripper.y;
    const double pi = std::numbers::pi;
    std::vector<double> full{x,
                             y,
                             state.grip_closed ? 1.0 : 0.0,
                             state.held_object() ? 1.0 : 0.0,
                             std::sin(pi * x),
                             std::cos(pi * y),
                             x * y,
                             x - y,
                             x + y};
    full.resize(static_cast<std::size_t>(embodiment.proprio_dim));
    return full;
}

}  // namespace raea::env
