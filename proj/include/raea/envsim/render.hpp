// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "raea/envsim/world.hpp"

namespace raea::env {

enum class Modality { text, audio, state_vec, image_grid, point_cloud, video_clip };

inline constexpr std::array kObservationModalities{Modality::state_vec, Modality::image_grid, Modality::point_cloud,
                                                   Modality::video_clip};
inline constexpr int kGrid = 16;
inline constexpr int kVideoFrames = 4;
inline constexpr std::size_t kImageSize = kGrid * kGrid * 3;
inline constexpr std::size_t kStateVecSize = 3 + 5 * kMaxObjects + 3;

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);
bool is_instruction_modality(Modality m);

/// Raw data for one modality. Text carries `tokens`; audio carries both the
/// tokens and their concatenated signatures in `values`; observations carry
/// `values` only.
struct Payload {
    Modality modality = Modality::state_vec;
    std::vector<int> tokens;
    std::vector<double> values;
    friend bool operator==(const Payload&, const Payload&) = default;
};

/// Gripper xy and grip flag, then (x, y, held, color code, shape code) for up
/// to four objects in id order (zero-filled), then goal centre and radius.
std::vector<double> render_state_vec(const WorldState& s);

/// 16x16x3 raster, index ((row * 16) + col) * 3 + channel, row from y.
/// Background is 0; each object paints a 3x3-neighbourhood pattern for its
/// shape in its color channels. Gripper and goal are not drawn.
std::vector<double> render_image(const WorldState& s);

/// (x, y, code) for the gripper (code 0) followed by every object in id order.
std::vector<double> render_point_cloud(const WorldState& s);

double object_code(Color c, Shape s);

/// Single-state rendering. A video clip from one state repeats the frame.
Payload render_observation(const WorldState& s, Modality m);

/// Clip from the most recent frames (oldest first); fewer than four frames
/// are front-padded by repeating the oldest one.
Payload video_payload(std::span<const std::vector<double>> frames);

Payload instruction_payload(const std::vector<int>& tokens, Modality m);

}  // namespace raea::env
