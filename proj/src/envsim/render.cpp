// SPDX-License-Identifier: Apache-2.0
#include "raea/envsim/render.hpp"

#include <algorithm>
#include <cmath>

#include "raea/common/error.hpp"

namespace raea::env {

namespace {

struct Cell {
    int dc;
    int dr;
};

std::vector<Cell> blob(Shape s) {
    switch (s) {
        case Shape::circle: return {{0, -1}, {-1, 0}, {0, 0}, {1, 0}, {0, 1}};
        case Shape::square: return {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
        case Shape::triangle: return {{0, -1}, {0, 0}, {-1, 1}, {0, 1}, {1, 1}};
    }
    return {};
}

std::array<double, 3> rgb(Color c) {
    switch (c) {
        case Color::red: return {1, 0, 0};
        case Color::green: return {0, 1, 0};
        case Color::blue: return {0, 0, 1};
        case Color::yellow: return {1, 1, 0};
    }
    return {0, 0, 0};
}

int cell_of(double v) { return std::clamp(static_cast<int>(std::floor(v * kGrid)), 0, kGrid - 1); }

}  // namespace

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::audio: return "audio";
        case Modality::state_vec: return "state_vec";
        case Modality::image_grid: return "image_grid";
        case Modality::point_cloud: return "point_cloud";
        case Modality::video_clip: return "video_clip";
    }
    return "?";
}

Modality parse_modality(std::string_view s) {
    for (Modality m : {Modality::text, Modality::audio, Modality::state_vec, Modality::image_grid,
                       Modality::point_cloud, Modality::video_clip})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown modality '" + std::string(s) + "'");
}

bool is_instruction_modality(Modality m) { return m == Modality::text || m == Modality::audio; }

double object_code(Color c, Shape s) {
    return (1.0 + static_cast<double>(static_cast<int>(c) * 3 + static_cast<int>(s))) / 12.0;
}

std::vector<double> render_state_vec(const WorldState& s) {
    std::vector<double> v;
    v.reserve(kStateVecSize);
    v.push_back(s.gripper.x);
    v.push_back(s.gripper.y);
    v.push_back(s.grip_closed ? 1.0 : 0.0);
    for (int i = 0; i < kMaxObjects; ++i) {
        if (i < static_cast<int>(s.objects.size())) {
            const Object& o = s.objects[static_cast<std::size_t>(i)];
            v.push_back(o.pos.x);
            v.push_back(o.pos.y);
            v.push_back(o.held ? 1.0 : 0.0);
            v.push_back((static_cast<int>(o.color) + 1) / 4.0);
            v.push_back((static_cast<int>(o.shape) + 1) / 3.0);
        } else {
            v.insert(v.end(), 5, 0.0);
        }
    }
    v.push_back(s.goal.center.x);
    v.push_back(s.goal.center.y);
    v.push_back(s.goal.radius);
    return v;
}

std::vector<double> render_image(const WorldState& s) {
    std::vector<double> img(kImageSize, 0.0);
    for (const auto& o : s.objects) {
        const int col = cell_of(o.pos.x);
        const int row = cell_of(o.pos.y);
        const auto color = rgb(o.color);
        for (Cell c : blob(o.shape)) {
            const int cc = col + c.dc;
            const int rr = row + c.dr;
            if (cc < 0 || cc >= kGrid || rr < 0 || rr >= kGrid) continue;
            for (int ch = 0; ch < 3; ++ch) {
                double& px = img[static_cast<std::size_t>((rr * kGrid + cc) * 3 + ch)];
                px = std::max(px, color[static_cast<std::size_t>(ch)]);
            }
        }
    }
    return img;
}

std::vector<double> render_point_cloud(const WorldState& s) {
    std::vector<double> pc{s.gripper.x, s.gripper.y, 0.0};
    for (const auto& o : s.objects) {
        pc.push_back(o.pos.x);
        pc.push_back(o.pos.y);
        pc.push_back(object_code(o.color, o.shape));
    }
    return pc;
}

Payload render_observation(const WorldState& s, Modality m) {
    Payload p;
    p.modality = m;
    switch (m) {
        case Modality::state_vec: p.values = render_state_vec(s); break;
        case Modality::image_grid: p.values = render_image(s); break;
        case Modality::point_cloud: p.values = render_point_cloud(s); break;
        case Modality::video_clip: {
            std::vector<std::vector<double>> frames{render_image(s)};
            return video_payload(frames);
        }
        default: throw ConfigError("'" + std::string(to_string(m)) + "' is not an observation modality");
    }
    return p;
}

Payload video_payload(std::span<const std::vector<double>> frames) {
    if (frames.empty()) throw ConfigError("video clip needs at least one frame");
    Payload p;
    p.modality = Modality::video_clip;
    const std::size_t n = frames.size();
    for (int k = 0; k < kVideoFrames; ++k) {
        const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n) - kVideoFrames + k;
        const auto& f = frames[static_cast<std::size_t>(std::max<std::ptrdiff_t>(idx, 0))];
        p.values.insert(p.values.end(), f.begin(), f.end());
    }
    return p;
}

Payload instruction_payload(const std::vector<int>& tokens, Modality m) {
    Payload p;
    p.modality = m;
    p.tokens = tokens;
    if (m == Modality::audio) {
        for (int t : tokens) {
            auto sig = audio_signature(t);
            p.values.insert(p.values.end(), sig.begin(), sig.end());
        }
    } else if (m != Modality::text) {
        throw ConfigError("'" + std::string(to_string(m)) + "' is not an instruction modality");
    }
    return p;
}

}  // namespace raea::env
