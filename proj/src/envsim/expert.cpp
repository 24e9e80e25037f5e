// SPDX-License-Identifier: Apache-2.0
#include "raea/envsim/expert.hpp"

#include <algorithm>
#include <cmath>

namespace raea::env {

namespace {

constexpr double kArrived = 1e-9;
constexpr double kPushOffset = 0.03;
constexpr double kSortSlot = 0.035;
constexpr double kStandoff = 0.1;
constexpr double kLateralSlack = 0.01;

const Object* first_target(const WorldState& s, const TaskSpec& task) {
    for (const auto& o : s.objects)
        if (o.color == task.color && o.shape == task.shape) return &o;
    return nullptr;
}

std::vector<double> grip(const EmbodimentSpec& e, double cmd) {
    std::vector<double> a(static_cast<std::size_t>(e.action_dim), 0.0);
    if (e.has_gripper()) a[2] = cmd;
    return a;
}

// Pushing needs the gripper directly behind the object (relative to the
// goal) before contact. From the front the gripper first steps sideways, then
// goes round to a standoff point behind, then closes in along the push axis.
std::vector<double> push_action(const WorldState& s, const Object& obj, const EmbodimentSpec& e) {
    const Vec2 goal = s.goal.center;
    const double gx = goal.x - obj.pos.x;
    const double gy = goal.y - obj.pos.y;
    const double norm = std::hypot(gx, gy);
    if (norm < kArrived) return grip(e, 0.0);
    const Vec2 u{gx / norm, gy / norm};
    const Vec2 n{-u.y, u.x};
    const Vec2 rel{s.gripper.x - obj.pos.x, s.gripper.y - obj.pos.y};
    const double along = rel.x * u.x + rel.y * u.y;
    const double lat = rel.x * n.x + rel.y * n.y;
    auto at = [&](double a, double l) { return Vec2{obj.pos.x + a * u.x + l * n.x, obj.pos.y + a * u.y + l * n.y}; };

    if (distance(s.gripper, obj.pos) < kContactRadius && along < 0.0) {
        return move_toward(s.gripper, {goal.x + rel.x, goal.y + rel.y}, e);
    }
    const double side = lat >= 0.0 ? 1.0 : -1.0;
    if (along <= -kStandoff / 2) {
        if (std::abs(lat) <= kLateralSlack) return move_toward(s.gripper, at(-kPushOffset, 0.0), e);
        return move_toward(s.gripper, at(-kStandoff, 0.0), e);
    }
    if (std::abs(lat) < 0.6 * kStandoff) return move_toward(s.gripper, at(along, side * kStandoff), e);
    return move_toward(s.gripper, at(-kStandoff, side * kStandoff), e);
}

std::vector<double> pick_place_action(const WorldState& s, const Object& obj, Vec2 drop, const EmbodimentSpec& e) {
    const Object* held = s.held_object();
    if (held && held->id == obj.id) {
        if (distance(s.gripper, drop) < kArrived) return grip(e, -1.0);
        return move_toward(s.gripper, drop, e);
    }
    if (s.grip_closed) return grip(e, -1.0);
    if (distance(s.gripper, obj.pos) < kContactRadius) return grip(e, 1.0);
    return move_toward(s.gripper, obj.pos, e);
}

}  // namespace

std::vector<double> move_toward(Vec2 from, Vec2 waypoint, const EmbodimentSpec& e) {
    std::vector<double> a(static_cast<std::size_t>(e.action_dim), 0.0);
    a[0] = std::clamp(waypoint.x - from.x, -e.max_step, e.max_step);
    a[1] = std::clamp(waypoint.y - from.y, -e.max_step, e.max_step);
    return a;
}

std::vector<double> scripted_expert(const WorldState& s, const TaskSpec& task, const EmbodimentSpec& e) {
    switch (task.kind) {
        case TaskKind::reach: {
            const Object* t = first_target(s, task);
            return t ? move_toward(s.gripper, t->pos, e) : grip(e, 0.0);
        }
        case TaskKind::push: {
            const Object* t = first_target(s, task);
            return t ? push_action(s, *t, e) : grip(e, 0.0);
        }
        case TaskKind::pick_place: {
            const Object* t = first_target(s, task);
            return t ? pick_place_action(s, *t, s.goal.center, e) : grip(e, 0.0);
        }
        case TaskKind::sort: {
            int placed = 0;
            const Object* next = nullptr;
            for (const auto& o : s.objects) {
                if (o.color != task.color) continue;
                if (o.held) {
                    next = &o;
                } else if (distance(o.pos, s.goal.center) <= s.goal.radius) {
                    ++placed;
                } else if (!next) {
                    next = &o;
                }
            }
            if (const Object* h = s.held_object(); h && h->color != task.color) return grip(e, -1.0);
            if (!next) return s.grip_closed ? grip(e, -1.0) : grip(e, 0.0);
            const double side = placed == 0 ? -kSortSlot : kSortSlot;
            return pick_place_action(s, *next, {s.goal.center.x + side, s.goal.center.y}, e);
        }
    }
    return grip(e, 0.0);
}

}  // namespace raea::env
