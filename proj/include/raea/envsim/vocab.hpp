// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace raea::env {

enum class Color { red, green, blue, yellow };
enum class Shape { circle, square, triangle };
enum class TaskKind { reach, push, pick_place, sort };

inline constexpr std::array kColors{Color::red, Color::green, Color::blue, Color::yellow};
inline constexpr std::array kShapes{Shape::circle, Shape::square, Shape::triangle};
inline constexpr std::array kTaskKinds{TaskKind::reach, TaskKind::push, TaskKind::pick_place, TaskKind::sort};
inline constexpr int kTemplatesPerTask = 5;
inline constexpr std::size_t kAudioSignatureDim = 8;

std::string_view to_string(Color c);
std::string_view to_string(Shape s);
std::string_view to_string(TaskKind k);
Color parse_color(std::string_view s);
Shape parse_shape(std::string_view s);
TaskKind parse_task_kind(std::string_view s);

/// Fixed instruction vocabulary (at most 64 words).
const std::vector<std::string>& vocabulary();
int token_id(std::string_view word);

/// Tokenised paraphrase `template_index` (0..4) for a task.
std::vector<int> instruction_tokens(TaskKind kind, Color color, Shape shape, int template_index);
std::string instruction_text(const std::vector<int>& tokens);

/// Deterministic 8-float signature standing in for the audio rendering of a token.
std::array<double, kAudioSignatureDim> audio_signature(int token);

}  // namespace raea::env
