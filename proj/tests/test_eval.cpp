// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "raea/common/error.hpp"
#include "raea/common/io.hpp"
#include "raea/envsim/expert.hpp"
#include "raea/evalharness/ablation.hpp"

using namespace raea;
using namespace raea::eval;

namespace {

PolicyFn expert_policy() {
    return [](const StepView& v) { return env::scripted_expert(v.state, v.task, v.embodiment); };
}

PolicyFn zero_policy() {
    return [](const StepView& v) { return std::vector<double>(static_cast<std::size_t>(v.embodiment.action_dim), 0.0); };
}

Experiment tiny_experiment() {
    Experiment ex;
    Arm& a = ex.base;
    a.data.demos_per_task = 2;
    a.data.bank_episodes_per_task = 1;
    a.data.bank_embodiments = {"franka", "widowx"};
    a.train.total_steps = 4;
    a.train.batch_size = 2;
    a.train.generator.d_model = 8;
    a.train.generator.n_heads = 2;
    a.train.generator.n_blocks = 1;
    a.train.generator.ffn_hidden = 8;
    a.train.generator.encoder_hidden = 8;
    a.eval.n_rollouts = 2;
    a.eval.seeds = {0, 1};
    for (DataSpec* d : {&ex.unseen, &ex.few_shot}) {
        d->demos_per_task = 2;
        d->demo_counts.clear();
        d->bank_episodes_per_task = 1;
        d->bank_embodiments = {"franka"};
        d->eval_rollouts = 1;
    }
    ex.unseen.eval_tasks = {"reach:green:square", "reach:yellow:circle"};
    ex.unseen.bank_tasks = {"reach:red:circle", "reach:blue:triangle", "reach:green:square", "reach:yellow:circle"};
    return ex;
}

/// Independent ranking: every fragment's dot product, sorted by score then id.
std::vector<int> brute_force_top(const bank::MemoryBank& b, const std::vector<double>& q, std::size_t k) {
    std::vector<std::pair<double, int>> all;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = 0.0;
        auto e = b.embedding(static_cast<int>(i));
        for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * e[j];
        all.emplace_back(s, static_cast<int>(i));
    }
    std::sort(all.begin(), all.end(), [](auto& x, auto& y) { return x.first != y.first ? x.first > y.first : x.second < y.second; });
    std::vector<int> ids;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].second);
    return ids;
}

}  // namespace

TEST_CASE("rollouts with scripted and zero policies") {
    for (const char* t : {"reach:red:circle", "push:blue:square", "pick_place:green:triangle", "sort:yellow"}) {
        CAPTURE(t);
        EvalTask et = parse_eval_task(t);
        for (int r = 0; r < 5; ++r) {
            const auto seed = rollout_seed(eval_task_name(et), 0, r);
            CHECK(rollout_with(expert_policy(), et.task, et.embodiment, seed).success);
            CHECK_FALSE(rollout_with(zero_policy(), et.task, et.embodiment, seed).success);
        }
    }
    EvalTask et = parse_eval_task("reach:red:circle@widowx");
    CHECK(et.embodiment.id == "widowx");
    CHECK_THROWS_AS(parse_eval_task("reach:red:circle@nobody"), ConfigError);
    auto bad = [](const StepView&) { return std::vector<double>{0.0}; };
    CHECK_THROWS_AS(rollout_with(bad, et.task, et.embodiment, 1), DimensionError);
}

TEST_CASE("evaluate aggregation, determinism and prefix property") {
    EvalConfig cfg;
    cfg.tasks = {"reach:red:circle", "push:blue:square"};
    cfg.n_rollouts = 6;
    cfg.seeds = {0, 1, 2};
    EvalReport expert = evaluate_policy(expert_policy, cfg);
    CHECK(expert.mean == 1.0);
    CHECK(expert.std == 0.0);
    CHECK(expert.cells.size() == 6);

    // A policy that acts only on even-numbered episodes gives a seed-dependent rate.
    auto flaky = [] {
        return PolicyFn([](const StepView& v) {
            if (static_cast<int>(v.state.gripper.x * 1000) % 2 == 0)
                return std::vector<double>(static_cast<std::size_t>(v.embodiment.action_dim), 0.0);
            return env::scripted_expert(v.state, v.task, v.embodiment);
        });
    };
    EvalReport a = evaluate_policy(flaky, cfg);
    EvalReport b = evaluate_policy(flaky, cfg);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].outcomes == b.cells[i].outcomes);
    CHECK(a.mean == b.mean);
    for (const auto& c : a.cells) {
        CHECK(c.rate() >= 0.0);
        CHECK(c.rate() <= 1.0);
    }
    double m = std::accumulate(a.seed_rates.begin(), a.seed_rates.end(), 0.0) / 3.0;
    CHECK(a.mean == doctest::Approx(m).epsilon(1e-15));

    EvalConfig twice = cfg;
    twice.n_rollouts = 12;
    EvalReport c = evaluate_policy(flaky, twice);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        std::vector<bool> prefix(c.cells[i].outcomes.begin(), c.cells[i].outcomes.begin() + 6);
        CHECK(prefix == a.cells[i].outcomes);
    }

    EvalConfig threaded = cfg;
    threaded.threads = 3;
    EvalReport d = evaluate_policy(flaky, threaded);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(d.cells[i].outcomes == a.cells[i].outcomes);

    EvalConfig bad = cfg;
    bad.n_rollouts = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cfg;
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("report files") {
    EvalConfig cfg;
    cfg.tasks = {"reach:red:circle", "push:blue:square"};
    cfg.n_rollouts = 3;
    EvalReport r = evaluate_policy(expert_policy, cfg);
    Table t;
    append_report(t, "fusion", "cross_attention", r);
    append_report(t, "fusion", "none", r);
    CHECK(t.rows.size() == 2 * 2 * 5);
    CHECK(t.variants.size() == 2);

    const std::string csv = to_csv(t);
    CHECK(csv.rfind("suite,variant,task,seed,successes,rollouts,rate\n", 0) == 0);
    CHECK(parse_csv(csv) == t.rows);
    CHECK(to_csv(t) == csv);
    CHECK(to_json_text(t) == to_json_text(t));

    const auto dir = std::filesystem::temp_directory_path() / "raea_test_report";
    std::filesystem::create_directories(dir);
    emit_report(t, dir / "r.csv", format_for_path(dir / "r.csv"));
    emit_report(t, dir / "r.json", format_for_path(dir / "r.json"));
    CHECK(read_file(dir / "r.csv") == csv);
    CHECK(nlohmann::json::parse(read_file(dir / "r.json")).at("rows").size() == t.rows.size());
    CHECK(format_for_path(dir / "r.txt") == ReportFormat::csv);
    CHECK_THROWS_AS(parse_csv("suite,variant\nx,y\n"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("suite variants and control arms") {
    Experiment ex = tiny_experiment();
    const std::string base = arm_hash(ex.base);
    CHECK(base == arm_hash(resolve(ex.base)));

    const std::map<Suite, std::size_t> counts{{Suite::modalities, 4}, {Suite::status_info, 3}, {Suite::embodiments, 2},
                                              {Suite::fusion, 4},     {Suite::diversity, 4},   {Suite::memory_bank_onoff, 4}};
    for (Suite s : kAllSuites) {
        CAPTURE(to_string(s));
        auto vs = suite_variants(s, ex);
        CHECK(vs.size() == counts.at(s));
        std::set<std::string> hashes;
        for (const auto& v : vs) hashes.insert(arm_hash(v.arm));
        CHECK(hashes.size() == vs.size());
        if (s != Suite::memory_bank_onoff) {
            CHECK(vs[0].control_of == base);
            CHECK(arm_hash(vs[0].arm) == base);
        }
        CHECK(parse_suite(to_string(s)) == s);
    }
    auto status = suite_variants(Suite::status_info, ex);
    CHECK(status[0].name == "all");
    auto mbo = suite_variants(Suite::memory_bank_onoff, ex);
    CHECK(mbo[0].name == "unseen/with_bank");
    CHECK(arm_hash(mbo[0].arm) == arm_hash(on_split(ex.base, ex.unseen)));
    CHECK(mbo[1].arm.train.generator.fusion == gen::Fusion::none);

    // Thread counts are not part of the hash.
    Arm threaded = ex.base;
    threaded.train.threads = 4;
    CHECK(arm_hash(threaded) == base);
    CHECK_THROWS_AS(parse_suite("colors"), ConfigError);
}

TEST_CASE("diversity arm without dedup or dropout is plain top-k") {
    Experiment ex = tiny_experiment();
    auto vs = suite_variants(Suite::diversity, ex);
    const auto it = std::find_if(vs.begin(), vs.end(), [](const Variant& v) { return v.name == "neither"; });
    REQUIRE(it != vs.end());
    const Arm arm = resolve(it->arm);
    Artifacts art = build_artifacts(arm);
    train::Dataset data(art.demos, art.bank.encoder(), art.bank.config().modalities);
    train::Trainer tr(arm.train, data, art.bank);
    Rng rng(3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const train::SampleRef r = data.ref(i);
        const enc::Query q = train::timed_query(data.episode(r.episode), r.t, art.bank.config().modalities, false);
        Rng unused(0);
        const auto e = enc::encode_query(q, art.bank.encoder(), enc::Mode::eval, 0.0, unused);
        std::vector<int> got;
        for (const auto& h : tr.retrieve_for(r, enc::Mode::train, rng)) got.push_back(h.id);
        CHECK(got == brute_force_top(art.bank, e, arm.train.retrieval.k));
    }
}

TEST_CASE("ablation runs train, cache and emit rows") {
    Experiment ex = tiny_experiment();
    const auto dir = std::filesystem::temp_directory_path() / "raea_test_ablation";
    std::filesystem::remove_all(dir);
    ArmRunner runner(dir);
    SuiteResult fusion = run_ablation(Suite::fusion, ex, runner);
    CHECK(fusion.controls_match);
    CHECK(fusion.table.variants.size() == 4);
    CHECK(fusion.table.rows.size() == 4 * 3 * 2);
    for (const auto& row : fusion.table.rows) {
        CHECK(row.rate() >= 0.0);
        CHECK(row.rate() <= 1.0);
    }
    CHECK(runner.trainings() == 4);

    SuiteResult status = run_ablation(Suite::status_info, ex, runner);
    CHECK(status.controls_match);
    CHECK(runner.trainings() == 6);
    CHECK(status.table.variants[0].config_hash == fusion.table.variants[0].config_hash);

    ArmRunner again(dir);
    SuiteResult fusion2 = run_ablation(Suite::fusion, ex, again);
    CHECK(again.trainings() == 0);
    CHECK(to_csv(fusion2.table) == to_csv(fusion.table));
    CHECK(to_json_text(fusion2.table) == to_json_text(fusion.table));
    std::filesystem::remove_all(dir);
}
