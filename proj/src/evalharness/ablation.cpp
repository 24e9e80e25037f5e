// SPDX-License-Identifier: Apache-2.0
#include "raea/evalharness/ablation.hpp"

#include <algorithm>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"
#include "raea/common/rng.hpp"
#include "raea/trainer/checkpoint.hpp"

namespace raea::eval {

using nlohmann::json;

namespace {

json modality_names(const std::vector<env::Modality>& ms) {
    json out = json::array();
    for (auto m : ms) out.push_back(std::string(env::to_string(m)));
    return out;
}

std::string modality_label(const bank::ModalitySet& m) {
    auto join = [](const std::vector<env::Modality>& ms) {
        std::string s;
        for (auto x : ms) s += (s.empty() ? "" : "+") + std::string(env::to_string(x));
        return s;
    };
    return join(m.instruction) + "|" + join(m.observation);
}

const std::vector<std::string>& or_default(const std::vector<std::string>& v, const std::vector<std::string>& d) {
    return v.empty() ? d : v;
}

std::vector<std::string> bank_embodiment_ids(const DataSpec& d) {
    if (!d.bank_embodiments.empty()) return d.bank_embodiments;
    std::vector<std::string> ids;
    for (const auto& e : env::builtin_embodiments()) ids.push_back(e.id);
    return ids;
}

bool needs_gripper(env::TaskKind k) { return k == env::TaskKind::pick_place || k == env::TaskKind::sort; }

}  // namespace

void DataSpec::validate() const {
    if (train_tasks.empty()) throw ConfigError("data needs at least one training task");
    if (demos_per_task < 1) throw ConfigError("demos_per_task must be >= 1");
    if (bank_episodes_per_task < 1) throw ConfigError("bank_episodes_per_task must be >= 1");
    if (eval_rollouts < 0) throw ConfigError("eval_rollouts must be >= 0");
    for (const auto& t : train_tasks) env::parse_task(t);
    for (const auto& t : bank_tasks) env::parse_task(t);
    for (const auto& t : eval_tasks) parse_eval_task(t);
    for (const auto& [t, n] : demo_counts) {
        if (std::find(train_tasks.begin(), train_tasks.end(), t) == train_tasks.end())
            throw ConfigError("demo_counts names '" + t + "', which is not a training task");
        if (n < 1) throw ConfigError("demo_counts for '" + t + "' must be >= 1");
    }
    const auto& emb = env::find_embodiment(train_embodiment);
    for (const auto& t : train_tasks)
        if (needs_gripper(env::parse_task(t).kind) && !emb.has_gripper())
            throw ConfigError("embodiment '" + emb.id + "' cannot demonstrate " + t);
    for (const auto& e : bank_embodiments) env::find_embodiment(e);
}

json to_json(const DataSpec& d) {
    return {{"train_tasks", d.train_tasks},
            {"demos_per_task", d.demos_per_task},
            {"demo_counts", d.demo_counts},
            {"train_embodiment", d.train_embodiment},
            {"demo_seed", d.demo_seed},
            {"bank_tasks", d.bank_tasks},
            {"bank_embodiments", d.bank_embodiments},
            {"bank_episodes_per_task", d.bank_episodes_per_task},
            {"bank_seed", d.bank_seed},
            {"eval_tasks", d.eval_tasks},
            {"eval_rollouts", d.eval_rollouts}};
}

json to_json(const bank::BankConfig& b) {
    return {{"L", b.L},
            {"stride", b.stride},
            {"instruction_modalities", modality_names(b.modalities.instruction)},
            {"observation_modalities", modality_names(b.modalities.observation)},
            {"encoder_seed", b.encoder_seed}};
}

json to_json(const EvalConfig& e) {
    return {{"n_rollouts", e.n_rollouts},
            {"tasks", e.tasks},
            {"seeds", e.seeds},
            {"retrieval", train::retrieval_to_json(e.retrieval)},
            {"vary_templates", e.vary_templates}};
}

DataSpec desk_data() {
    DataSpec d;
    d.train_tasks = {"reach:red:circle", "push:blue:square", "pick_place:green:triangle"};
    return d;
}

DataSpec unseen_object_data() {
    DataSpec d;
    const std::vector<std::string> seen{"reach:red:circle", "reach:blue:triangle"};
    d.train_tasks = seen;
    d.demos_per_task = 25;
    d.bank_episodes_per_task = 10;
    for (auto c : env::kColors)
        for (auto s : env::kShapes) {
            const std::string name = "reach:" + std::string(env::to_string(c)) + ":" + std::string(env::to_string(s));
            d.bank_tasks.push_back(name);
            if (std::find(seen.begin(), seen.end(), name) == seen.end()) d.eval_tasks.push_back(name);
        }
    d.eval_rollouts = 10;
    return d;
}

DataSpec few_shot_data() {
    DataSpec d = desk_data();
    const std::vector<std::string> few{"push:yellow:circle", "pick_place:red:square"};
    for (const auto& t : few) {
        d.train_tasks.push_back(t);
        d.demo_counts[t] = 5;
    }
    d.eval_tasks = few;
    return d;
}

Arm desk_arm() { return Arm{desk_data(), {}, {}, {}}; }

Arm resolve(Arm arm) {
    if (arm.eval.tasks.empty()) {
        arm.eval.tasks = or_default(arm.data.eval_tasks, arm.data.train_tasks);
        for (auto& t : arm.eval.tasks)
            if (t.find('@') == std::string::npos) t += "@" + arm.data.train_embodiment;
    }
    if (arm.data.eval_rollouts > 0) arm.eval.n_rollouts = arm.data.eval_rollouts;
    arm.train.generator.feature_dim = enc::kEmbedDim;
    return arm;
}

json to_json(const Arm& arm) {
    json t = train::to_json(arm.train);
    // Worker counts never change results.
    t.erase("threads");
    t.erase("checkpoint_every");
    json e = to_json(arm.eval);
    return {{"data", to_json(arm.data)}, {"bank", to_json(arm.bank)}, {"train", t}, {"eval", e}};
}

std::string arm_hash(const Arm& arm) { return hex64(fnv1a64(to_json(resolve(arm)).dump())); }

Artifacts build_artifacts(const Arm& arm) {
    const DataSpec& d = arm.data;
    d.validate();
    Artifacts out;
    const auto& trainer_emb = env::find_embodiment(d.train_embodiment);
    for (const auto& name : d.train_tasks) {
        const auto it = d.demo_counts.find(name);
        const int n = it == d.demo_counts.end() ? d.demos_per_task : it->second;
        auto eps = env::generate_demo_set(env::parse_task(name), trainer_emb, n, d.demo_seed);
        out.demos.insert(out.demos.end(), eps.begin(), eps.end());
    }
    for (const auto& name : or_default(d.bank_tasks, d.train_tasks)) {
        const env::TaskSpec task = env::parse_task(name);
        for (const auto& id : bank_embodiment_ids(d)) {
            const auto& emb = env::find_embodiment(id);
            if (needs_gripper(task.kind) && !emb.has_gripper()) continue;
            auto eps = env::generate_demo_set(task, emb, d.bank_episodes_per_task, d.bank_seed);
            out.bank_episodes.insert(out.bank_episodes.end(), eps.begin(), eps.end());
        }
    }
    bank::BankConfig bc = arm.bank;
    bc.config_hash = arm_hash(arm);
    out.bank = bank::build_bank(out.bank_episodes, bc);
    return out;
}

ArmRunner::ArmRunner(std::filesystem::path cache_dir, std::function<void(const std::string&)> log)
    : cache_dir_(std::move(cache_dir)), log_(std::move(log)) {}

const ArmResult& ArmRunner::run(const Arm& raw) {
    const Arm arm = resolve(raw);
    const std::string hash = arm_hash(arm);
    if (auto it = done_.find(hash); it != done_.end()) return *it->second;

    Artifacts art = build_artifacts(arm);
    train::Dataset data(art.demos, art.bank.encoder(), art.bank.config().modalities);
    train::Trainer trainer(arm.train, data, art.bank);

    auto result = std::make_unique<ArmResult>(ArmResult{hash, train::initial_state(arm.train), 0.0, 0.0, {}});
    train::TrainState& s = result->state;
    result->initial_loss = train::dataset_loss(s.params, data, art.bank, arm.train.retrieval);

    const std::string bank_hash = bank::bank_checksum(art.bank);
    const std::filesystem::path ckpt = cache_dir_.empty() ? std::filesystem::path{} : cache_dir_ / (hash + ".ckpt");
    bool loaded = false;
    if (!ckpt.empty() && std::filesystem::exists(ckpt)) {
        train::Checkpoint c = train::load_checkpoint(ckpt);
        if (c.config_hash == hash && c.state.step == arm.train.total_steps) {
            s = std::move(c.state);
            loaded = true;
            if (log_) log_("reused " + hash);
        }
    }
    if (!loaded) {
        if (log_) log_("training " + hash);
        trainer.run(s, arm.train.total_steps);
        ++trainings_;
        if (!ckpt.empty()) {
            std::filesystem::create_directories(cache_dir_);
            train::save_checkpoint(arm.train, s, ckpt, hash, bank_hash);
        }
    }
    result->final_loss = train::dataset_loss(s.params, data, art.bank, arm.train.retrieval);

    if (log_) log_("evaluating " + hash);
    result->report = evaluate(s.params, art.bank, arm.eval);
    result->report.config_hash = hash;
    result->report.checkpoint_hash = hex64(fnv1a64(train::serialize_checkpoint(arm.train, s, hash, bank_hash)));
    return *done_.emplace(hash, std::move(result)).first->second;
}

std::string_view to_string(Suite s) {
    switch (s) {
        case Suite::modalities: return "modalities";
        case Suite::status_info: return "status_info";
        case Suite::embodiments: return "embodiments";
        case Suite::fusion: return "fusion";
        case Suite::diversity: return "diversity";
        case Suite::memory_bank_onoff: return "memory_bank_onoff";
    }
    return "?";
}

Suite parse_suite(std::string_view s) {
    for (Suite x : kAllSuites)
        if (to_string(x) == s) return x;
    throw ConfigError("unknown suite '" + std::string(s) + "'");
}

Arm on_split(const Arm& base, const DataSpec& split) {
    Arm a = base;
    a.data = split;
    a.eval.tasks.clear();
    return a;
}

std::vector<Variant> suite_variants(Suite suite, const Experiment& ex) {
    const Arm& base = ex.base;
    const std::string base_hash = arm_hash(base);
    std::vector<Variant> out;
    auto control = [&](std::string name) { out.push_back({std::move(name), base, base_hash}); };
    auto add = [&](std::string name, Arm a) { out.push_back({std::move(name), std::move(a), ""}); };

    switch (suite) {
        case Suite::modalities: {
            using env::Modality;
            const std::vector<bank::ModalitySet> sets{
                {{Modality::text}, {Modality::state_vec, Modality::image_grid}},
                {{Modality::text}, {Modality::state_vec}},
                {{Modality::text}, {Modality::image_grid}},
                {{Modality::text}, {Modality::video_clip}},
            };
            control(modality_label(base.bank.modalities));
            for (const auto& m : sets) {
                if (m == base.bank.modalities) continue;
                Arm a = base;
                a.bank.modalities = m;
                add(modality_label(m), a);
            }
            break;
        }
        case Suite::status_info: {
            control(std::string(gen::to_string(base.train.generator.status_tokens)));
            for (auto st : {gen::StatusTokens::all, gen::StatusTokens::no_proprio, gen::StatusTokens::no_action_proprio}) {
                if (st == base.train.generator.status_tokens) continue;
                Arm a = base;
                a.train.generator.status_tokens = st;
                add(std::string(gen::to_string(st)), a);
            }
            break;
        }
        case Suite::embodiments: {
            control(base.train.retrieval.embodiment_filter ? "filtered" : "all");
            Arm a = base;
            a.train.retrieval.embodiment_filter = std::set<std::string>{base.data.train_embodiment};
            a.eval.retrieval.embodiment_filter = a.train.retrieval.embodiment_filter;
            add(base.data.train_embodiment + "_only", a);
            break;
        }
        case Suite::fusion: {
            control(std::string(gen::to_string(base.train.generator.fusion)));
            for (auto f : {gen::Fusion::cross_attention, gen::Fusion::film, gen::Fusion::concat, gen::Fusion::none}) {
                if (f == base.train.generator.fusion) continue;
                Arm a = base;
                a.train.generator.fusion = f;
                add(std::string(gen::to_string(f)), a);
            }
            break;
        }
        case Suite::diversity: {
            const bool dedup = base.train.retrieval.dedup;
            const bool dropout = base.train.retrieval.query_dropout_rate > 0.0;
            auto label = [](bool dd, bool dr) -> std::string {
                if (dd && dr) return "full";
                if (dr) return "no_dedup";
                if (dd) return "no_dropout";
                return "neither";
            };
            control(label(dedup, dropout));
            const double rate = dropout ? base.train.retrieval.query_dropout_rate : bank::RetrievalConfig{}.query_dropout_rate;
            for (auto [dd, dr] : {std::pair{true, true}, {false, true}, {true, false}, {false, false}}) {
                if (dd == dedup && dr == dropout) continue;
                Arm a = base;
                a.train.retrieval.dedup = dd;
                a.eval.retrieval.dedup = dd;
                a.train.retrieval.query_dropout_rate = dr ? rate : 0.0;
                add(label(dd, dr), a);
            }
            break;
        }
        case Suite::memory_bank_onoff: {
            for (const auto& [split_name, split] : {std::pair{"unseen", &ex.unseen}, {"few_shot", &ex.few_shot}}) {
                Arm with = on_split(base, *split);
                out.push_back({std::string(split_name) + "/with_bank", with, arm_hash(with)});
                Arm without = with;
                without.train.generator.fusion = gen::Fusion::none;
                add(std::string(split_name) + "/no_bank", without);
            }
            break;
        }
    }
    return out;
}

SuiteResult run_ablation(Suite suite, const Experiment& ex, ArmRunner& runner) {
    SuiteResult out;
    for (const Variant& v : suite_variants(suite, ex)) {
        const ArmResult& r = runner.run(v.arm);
        const bool is_control = !v.control_of.empty();
        if (is_control && r.hash != v.control_of) out.controls_match = false;
        out.arms.emplace_back(r.hash, is_control);
        append_report(out.table, std::string(to_string(suite)), v.name, r.report);
    }
    return out;
}

}  // namespace raea::eval
