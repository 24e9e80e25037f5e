// SPDX-License-Identifier: Apache-2.0
#include "raea/envsim/vocab.hpp"

#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"

namespace raea::env {

namespace {

const std::array<std::array<const char*, kTemplatesPerTask>, 4> kTemplates{{
    {"reach the {c} {s}", "move to the {c} {s}", "go to the {c} {s}", "touch the {c} {s}",
     "approach the {c} {s}"},
    {"push the {c} {s} into the goal", "slide the {c} {s} to the goal", "shove the {c} {s} toward the goal",
     "nudge the {c} {s} into the goal region", "push the {c} {s} to the goal zone"},
    {"pick up the {c} {s} and place it in the goal", "put the {c} {s} in the goal", "carry the {c} {s} to the goal",
     "lift the {c} {s} and drop it in the goal", "bring the {c} {s} to the goal region"},
    {"sort all {c} objects into the goal", "put every {c} object in the goal", "gather the {c} objects in the goal",
     "collect all {c} objects into the goal zone", "bring every {c} object to the goal region"},
}};

}  // namespace

std::string_view to_string(Color c) {
    switch (c) {
        case Color::red: return "red";
        case Color::green: return "green";
        case Color::blue: return "blue";
        case Color::yellow: return "yellow";
    }
    return "?";
}

std::string_view to_string(Shape s) {
    switch (s) {
        case Shape::circle: return "circle";
        case Shape::square: return "square";
        case Shape::triangle: return "triangle";
    }
    return "?";
}

std::string_view to_string(TaskKind k) {
    switch (k) {
        case TaskKind::reach: return "reach";
        case TaskKind::push: return "push";
        case TaskKind::pick_place: return "pick_place";
        case TaskKind::sort: return "sort";
    }
    return "?";
}

Color parse_color(std::string_view s) {
    for (Color c : kColors)
        if (to_string(c) == s) return c;
    throw ConfigError("unknown color '" + std::string(s) + "'");
}

Shape parse_shape(std::string_view s) {
    for (Shape x : kShapes)
        if (to_string(x) == s) return x;
    throw ConfigError("unknown shape '" + std::string(s) + "'");
}

TaskKind parse_task_kind(std::string_view s) {
    for (TaskKind k : kTaskKinds)
        if (to_string(k) == s) return k;
    throw ConfigError("unknown task kind '" + std::string(s) + "'");
}

const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> out;
        auto add = [&out](const std::string& w) {
            for (const auto& e : out)
                if (e == w) return;
            out.push_back(w);
        };
        for (Color c : kColors) add(std::string(to_string(c)));
        for (Shape s : kShapes) add(std::string(to_string(s)));
        for (const auto& group : kTemplates) {
            for (const char* tpl : group) {
                std::istringstream is(tpl);
                std::string w;
                while (is >> w)
                    if (w != "{c}" && w != "{s}") add(w);
            }
        }
        return out;
    }();
    return words;
}

int token_id(std::string_view word) {
    const auto& v = vocabulary();
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == word) return static_cast<int>(i);
    throw ConfigError("word not in vocabulary: " + std::string(word));
}

std::vector<int> instruction_tokens(TaskKind kind, Color color, Shape shape, int template_index) {
    if (template_index < 0 || template_index >= kTemplatesPerTask) {
        throw ConfigError("template index out of range: " + std::to_string(template_index));
    }
    std::istringstream is(kTemplates[static_cast<std::size_t>(kind)][static_cast<std::size_t>(template_index)]);
    std::vector<int> out;
    std::string w;
    while (is >> w) {
        if (w == "{c}") {
            out.push_back(token_id(to_string(color)));
        } else if (w == "{s}") {
            out.push_back(token_id(to_string(shape)));
        } else {
            out.push_back(token_id(w));
        }
    }
    return out;
}

std::string instruction_text(const std::vector<int>& tokens) {
    std::string out;
    const auto& v = vocabulary();
    for (int t : tokens) {
        if (!out.empty()) out += ' ';
        out += v.at(static_cast<std::size_t>(t));
    }
    return out;
}

std::array<double, kAudioSignatureDim> audio_signature(int token) {
    Rng rng(derive_seed(0x617564696fULL, static_cast<std::uint64_t>(token)));
    std::array<double, kAudioSignatureDim> sig{};
    for (auto& x : sig) x = rng.normal();
    return sig;
}

}  // namespace raea::env
