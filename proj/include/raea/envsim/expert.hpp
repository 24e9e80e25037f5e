// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "raea/envsim/world.hpp"

namespace raea::env {

/// Scripted demonstrator: proportional controller (gain 1) toward the current
/// waypoint, each movement dim clipped to max_step. Grip commands are +1
/// (close) and -1 (open) on the third action dim.
std::vector<double> scripted_expert(const WorldState& state, const TaskSpec& task, const EmbodimentSpec& embodiment);

/// Movement-only part of the controller, exposed for tests.
std::vector<double> move_toward(Vec2 from, Vec2 waypoint, const EmbodimentSpec& embodiment);

}  // namespace raea::env
