// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <set>

#include "doctest.h"
#include "raea/common/error.hpp"
#include "raea/envsim/demos.hpp"
#include "raea/envsim/expert.hpp"

using namespace raea;
using namespace raea::env;

namespace {

const EmbodimentSpec& franka() { return find_embodiment("franka"); }

WorldState bare_state(Vec2 gripper) {
    WorldState s;
    s.gripper = gripper;
    s.goal = {{0.5, 0.92}, 0.08};
    return s;
}

double expert_success_rate(const TaskSpec& task, const EmbodimentSpec& emb, int n) {
    int ok = 0;
    for (int seed = 0; seed < n; ++seed) ok += run_expert_episode(task, emb, static_cast<std::uint64_t>(seed)).success;
    return static_cast<double>(ok) / n;
}

}  // namespace

TEST_CASE("vocabulary and templates") {
    CHECK(vocabulary().size() <= 64);
    for (TaskKind k : kTaskKinds) {
        std::set<std::vector<int>> distinct;
        for (int t = 0; t < kTemplatesPerTask; ++t) distinct.insert(instruction_tokens(k, Color::blue, Shape::square, t));
        CHECK(distinct.size() == kTemplatesPerTask);
    }
    CHECK(instruction_text(instruction_tokens(TaskKind::reach, Color::red, Shape::circle, 0)) == "reach the red circle");
    CHECK_THROWS_AS(instruction_tokens(TaskKind::reach, Color::red, Shape::circle, 5), ConfigError);
    CHECK(audio_signature(4) == audio_signature(4));
    CHECK(audio_signature(4) != audio_signature(5));
    CHECK(parse_task("sort:green").kind == TaskKind::sort);
    CHECK_THROWS_AS(parse_task("reach:green"), ConfigError);
    CHECK(task_name(parse_task("pick_place:blue:triangle")) == "pick_place:blue:triangle");
}

TEST_CASE("make_env") {
    TaskSpec task = make_task(TaskKind::push, Color::green, Shape::triangle);
    CHECK(make_env(task, franka(), 42) == make_env(task, franka(), 42));
    CHECK_FALSE(make_env(task, franka(), 42) == make_env(task, franka(), 43));
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (TaskKind k : kTaskKinds) {
            WorldState s = make_env(make_task(k, Color::yellow, Shape::circle), franka(), seed);
            for (const auto& o : s.objects) {
                CHECK(o.pos.x >= 0.05);
                CHECK(o.pos.x <= 0.95);
                CHECK(o.pos.y >= 0.05);
                CHECK(o.pos.y <= 0.95);
            }
            CHECK(s.objects.size() <= static_cast<std::size_t>(kMaxObjects));
            for (std::size_t i = 0; i < s.objects.size(); ++i) CHECK(s.objects[i].id == static_cast<int>(i));
        }
    }
    WorldState sorted = make_env(make_task(TaskKind::sort, Color::red, Shape::circle), franka(), 1);
    int reds = 0;
    for (const auto& o : sorted.objects) reds += o.color == Color::red;
    CHECK(sorted.objects.size() >= 2);
    CHECK(reds >= 2);
    EmbodimentSpec wide{"wide", 10, 0.1, 4};
    CHECK_THROWS_AS(make_env(task, wide, 0), CapViolation);
}

TEST_CASE("step dynamics") {
    TaskSpec task = make_task(TaskKind::reach, Color::red, Shape::circle);
    WorldState s = bare_state({0, 0});
    std::vector<double> a{0.1, 0, 0, 0};
    StepResult r = step(s, task, franka(), a);
    CHECK(r.state.gripper == Vec2{0.1, 0});
    CHECK(r.state.step_count == 1);

    std::vector<double> big{0.5, 0, 0, 0};
    CHECK(step(s, task, franka(), big).state.gripper.x == doctest::Approx(0.1));
    std::vector<double> out{-0.1, -0.1, 0, 0};
    CHECK(step(s, task, franka(), out).state.gripper == Vec2{0, 0});

    std::vector<double> short_action{0.1, 0};
    CHECK_THROWS_AS(step(s, task, franka(), short_action), DimensionError);

    WorldState h = bare_state({0.3, 0.3});
    h.objects.push_back({0, Color::red, Shape::circle, {0.31, 0.3}, false});
    std::vector<double> close{0, 0, 1, 0};
    WorldState g = step(h, task, franka(), close).state;
    REQUIRE(g.held_object());
    CHECK(g.grip_closed);
    std::vector<double> move{0.05, 0.07, 0, 0};
    WorldState m = step(g, task, franka(), move).state;
    CHECK(m.objects[0].pos == m.gripper);
    std::vector<double> open{0, 0, -1, 0};
    WorldState o = step(m, task, franka(), open).state;
    CHECK_FALSE(o.grip_closed);
    CHECK(o.held_object() == nullptr);

    WorldState p = bare_state({0.3, 0.3});
    p.objects.push_back({0, Color::red, Shape::circle, {0.33, 0.3}, false});
    p.objects.push_back({1, Color::blue, Shape::circle, {0.27, 0.3}, false});
    std::vector<double> right{0.05, 0, 0, 0};
    WorldState q = step(p, task, franka(), right).state;
    CHECK(q.objects[0].pos.x == doctest::Approx(0.38));
    CHECK(q.objects[1].pos.x == doctest::Approx(0.27));

    TaskSpec short_task = task;
    short_task.horizon = 1;
    CHECK(step(bare_state({0.5, 0.5}), short_task, franka(), a).done);
}

TEST_CASE("expert controller") {
    auto a = move_toward({0, 0}, {1, 0}, franka());
    CHECK(a == std::vector<double>{0.1, 0, 0, 0});
    auto still = move_toward({0.4, 0.4}, {0.4, 0.4}, franka());
    CHECK(std::abs(still[0]) < 1e-12);
    CHECK(std::abs(still[1]) < 1e-12);

    for (Color c : kColors)
        for (Shape s : kShapes) CHECK(expert_success_rate(make_task(TaskKind::reach, c, s), franka(), 100) == 1.0);

    for (TaskKind k : {TaskKind::reach, TaskKind::push, TaskKind::pick_place}) {
        for (const auto& emb : builtin_embodiments()) {
            if (!emb.has_gripper() && k == TaskKind::pick_place) continue;
            CAPTURE(emb.id);
            CAPTURE(to_string(k));
            CHECK(expert_success_rate(make_task(k, Color::blue, Shape::triangle), emb, 200) >= 0.99);
        }
    }
    CHECK(expert_success_rate(make_task(TaskKind::sort, Color::yellow, Shape::circle), franka(), 100) >= 0.95);

    Episode ep = run_expert_episode(make_task(TaskKind::push, Color::red, Shape::square), find_embodiment("ur5"), 3);
    for (const auto& st : ep.steps)
        for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(st.action[i]) <= 0.08);
}

TEST_CASE("rendering") {
    WorldState empty = bare_state({0.2, 0.2});
    auto img = render_image(empty);
    CHECK(img.size() == kImageSize);
    for (double v : img) CHECK(v == 0.0);

    WorldState one = bare_state({0.2, 0.2});
    one.objects.push_back({0, Color::yellow, Shape::square, {0.5, 0.5}, false});
    auto pix = render_image(one);
    for (int r = 0; r < kGrid; ++r)
        for (int c = 0; c < kGrid; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                const double v = pix[static_cast<std::size_t>((r * kGrid + c) * 3 + ch)];
                if (v != 0.0) {
                    CHECK(std::abs(r - 8) <= 1);
                    CHECK(std::abs(c - 8) <= 1);
                    CHECK(ch != 2);
                }
            }
    CHECK(pix[(8 * kGrid + 8) * 3 + 0] == 1.0);

    WorldState s = make_env(make_task(TaskKind::sort, Color::blue, Shape::circle), franka(), 8);
    auto pc = render_point_cloud(s);
    CHECK(pc.size() == 3 * (s.objects.size() + 1));
    auto sv = render_state_vec(s);
    CHECK(sv.size() == kStateVecSize);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        CHECK(std::abs(sv[3 + 5 * i] - pc[3 * (i + 1)]) < 1e-9);
        CHECK(std::abs(sv[3 + 5 * i + 1] - pc[3 * (i + 1) + 1]) < 1e-9);
    }
    CHECK(render_observation(s, Modality::video_clip).values.size() == kVideoFrames * kImageSize);
    CHECK_THROWS_AS(render_observation(s, Modality::text), ConfigError);
    CHECK_THROWS_AS(parse_modality("lidar"), ConfigError);
}

TEST_CASE("demo generation and files") {
    TaskSpec task = make_task(TaskKind::pick_place, Color::red, Shape::triangle, 2);
    auto demos = generate_demos(task, franka(), 10, 0);
    CHECK(demos.size() == 10);
    std::set<std::string> ids;
    for (const auto& e : demos) {
        CHECK(e.success);
        ids.insert(e.id);
        CHECK(static_cast<int>(e.steps.size()) <= task.horizon);
    }
    CHECK(ids.size() == 10);
    CHECK(serialize_demos(demos, "abc") == serialize_demos(generate_demos(task, franka(), 10, 0), "abc"));

    auto back = parse_demos(serialize_demos(demos));
    REQUIRE(back.size() == demos.size());
    CHECK(serialize_demos(back) == serialize_demos(demos));
    for (std::size_t i = 0; i < demos.size(); ++i) {
        CHECK(back[i].steps == demos[i].steps);
        CHECK(back[i].id == demos[i].id);
    }

    auto push = generate_demos(make_task(TaskKind::push, Color::green, Shape::circle), franka(), 25, 100);
    double mean_len = 0;
    for (const auto& e : push) mean_len += static_cast<double>(e.steps.size());
    CHECK(mean_len / 25 < 60);

    Episode e = demos[0];
    auto clip = e.observation(0, Modality::video_clip);
    std::vector<std::vector<double>> frames{e.steps[0].image};
    CHECK(clip == video_payload(frames));
    CHECK(e.observation(5, Modality::video_clip).values.size() == kVideoFrames * kImageSize);
    CHECK(e.instruction(Modality::audio).values.size() == kAudioSignatureDim * task.instruction_tokens.size());

    auto cycled = generate_demo_set(task, franka(), 7, 0);
    REQUIRE(cycled.size() == 7);
    for (int j = 0; j < 7; ++j) {
        CHECK(cycled[static_cast<std::size_t>(j)].task.template_index == j % kTemplatesPerTask);
        CHECK(cycled[static_cast<std::size_t>(j)].success);
    }
    CHECK(cycled[0].id != cycled[5].id);

    CHECK_THROWS_AS(generate_demos(task, find_embodiment("pointbot"), 1, 0), ConfigError);
    CHECK_THROWS_AS(parse_demos("{not json"), CorruptDemos);
}
