// SPDX-License-Identifier: Apache-2.0
#include "raea/evalharness/eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"
#include "raea/envsim/render.hpp"
#include "raea/generator/model.hpp"
#include "raea/trainer/dataset.hpp"

namespace raea::eval {

EvalTask parse_eval_task(const std::string& text) {
    const auto at = text.find('@');
    const std::string task = text.substr(0, at);
    const std::string emb = at == std::string::npos ? "franka" : text.substr(at + 1);
    return {env::parse_task(task), env::find_embodiment(emb)};
}

std::string eval_task_name(const EvalTask& t) { return env::task_name(t.task) + "@" + t.embodiment.id; }

void EvalConfig::validate() const {
    if (n_rollouts < 1) throw ConfigError("n_rollouts must be >= 1");
    if (seeds.empty()) throw ConfigError("eval seeds must be non-empty");
    if (tasks.empty()) throw ConfigError("eval needs at least one task");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    for (const auto& t : tasks) parse_eval_task(t);
    retrieval.validate();
}

std::uint64_t rollout_seed(const std::string& task_name, std::uint64_t seed, int rollout) {
    return derive_seed(fnv1a64(task_name), seed, static_cast<std::uint64_t>(rollout));
}

RolloutResult rollout_with(const PolicyFn& policy, const env::TaskSpec& task, const env::EmbodimentSpec& embodiment,
                           std::uint64_t env_seed) {
    env::WorldState state = env::make_env(task, embodiment, env_seed);
    std::vector<std::vector<double>> frames{env::render_image(state)};
    RolloutResult out;
    for (int t = 0;; ++t) {
        std::vector<double> a = policy(StepView{state, task, embodiment, frames, t});
        if (static_cast<int>(a.size()) != embodiment.action_dim) {
            throw DimensionError("policy returned " + std::to_string(a.size()) + " action dims");
        }
        for (std::size_t i = 0; i < 2; ++i) a[i] = std::clamp(a[i], -embodiment.max_step, embodiment.max_step);
        env::StepResult r = env::step(state, task, embodiment, a);
        state = std::move(r.state);
        out.steps = t + 1;
        if (r.done) {
            out.success = r.success;
            return out;
        }
        frames.push_back(env::render_image(state));
        if (frames.size() > static_cast<std::size_t>(env::kVideoFrames)) frames.erase(frames.begin());
    }
}

void check_compatible(const gen::GeneratorParams& params, const bank::MemoryBank& bank) {
    if (params.config().feature_dim != static_cast<int>(bank.encoder().d_e())) {
        throw MismatchError("generator feature width " + std::to_string(params.config().feature_dim) +
                            " does not match bank embedding width " + std::to_string(bank.encoder().d_e()));
    }
}

void check_pairing(const train::Checkpoint& ckpt, const bank::MemoryBank& bank) {
    check_compatible(ckpt.state.params, bank);
    if (!ckpt.bank_hash.empty() && ckpt.bank_hash != bank::bank_checksum(bank)) {
        throw MismatchError("checkpoint was trained against bank " + ckpt.bank_hash + ", got " +
                            bank::bank_checksum(bank));
    }
    const std::string& bank_cfg = bank.config().config_hash;
    if (!ckpt.config_hash.empty() && !bank_cfg.empty() && ckpt.config_hash != bank_cfg) {
        throw MismatchError("checkpoint config " + ckpt.config_hash + " does not match bank config " + bank_cfg);
    }
}

namespace {

env::Payload observe(const StepView& v, env::Modality m) {
    if (m == env::Modality::video_clip) return env::video_payload(v.frames);
    return env::render_observation(v.state, m);
}

}  // namespace

PolicyFn generator_policy(const gen::GeneratorParams& params, const bank::MemoryBank& bank,
                          const bank::RetrievalConfig& retrieval) {
    check_compatible(params, bank);
    retrieval.validate();
    const bool use_bank = params.config().fusion != gen::Fusion::none && !bank.empty();
    auto hits = std::make_shared<bank::RetrievalResult>();
    return [&params, &bank, retrieval, use_bank, hits](const StepView& v) {
        const auto& mods = bank.config().modalities;
        std::vector<env::Payload> instr, obs;
        for (auto m : mods.instruction) instr.push_back(env::instruction_payload(v.task.instruction_tokens, m));
        for (auto m : mods.observation) obs.push_back(observe(v, m));
        if (use_bank && (v.t == 0 || retrieval.per_step_retrieval)) {
            enc::Query q;
            if (v.t == 0) q.instruction = instr;
            q.observation = obs;
            Rng unused(0);
            *hits = bank::retrieve(bank, q, retrieval, enc::Mode::eval, unused);
        }
        gen::MainInput in = train::make_main_input(instr, obs, env::proprio(v.state, v.embodiment), bank.encoder());
        return gen::predict(params, in, train::resolve(bank, *hits), v.embodiment.action_dim);
    };
}

RolloutResult rollout(const gen::GeneratorParams& params, const bank::MemoryBank& bank,
                      const bank::RetrievalConfig& retrieval, const EvalTask& task, std::uint64_t env_seed,
                      bool vary_template) {
    env::TaskSpec spec = task.task;
    if (vary_template) {
        spec = env::make_task(spec.kind, spec.color, spec.shape,
                              static_cast<int>(env_seed % static_cast<std::uint64_t>(env::kTemplatesPerTask)));
    }
    return rollout_with(generator_policy(params, bank, retrieval), spec, task.embodiment, env_seed);
}

EvalReport evaluate_policy(const std::function<PolicyFn()>& make_policy, const EvalConfig& cfg) {
    cfg.validate();
    std::vector<EvalTask> tasks;
    for (const auto& t : cfg.tasks) tasks.push_back(parse_eval_task(t));

    struct Job {
        std::size_t cell;
        int r;
    };
    EvalReport report;
    std::vector<Job> jobs;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        for (std::uint64_t seed : cfg.seeds) {
            CellResult c;
            c.task = eval_task_name(tasks[ti]);
            c.seed = seed;
            c.rollouts = cfg.n_rollouts;
            c.outcomes.assign(static_cast<std::size_t>(cfg.n_rollouts), false);
            for (int r = 0; r < cfg.n_rollouts; ++r) jobs.push_back({report.cells.size(), r});
            report.cells.push_back(std::move(c));
        }
    }

    auto run_job = [&](const Job& j) {
        CellResult& c = report.cells[j.cell];
        const EvalTask& et = tasks[j.cell / cfg.seeds.size()];
        const std::uint64_t env_seed = rollout_seed(c.task, c.seed, j.r);
        env::TaskSpec spec = et.task;
        if (cfg.vary_templates) {
            spec = env::make_task(spec.kind, spec.color, spec.shape,
                                  static_cast<int>(env_seed % static_cast<std::uint64_t>(env::kTemplatesPerTask)));
        }
        c.outcomes[static_cast<std::size_t>(j.r)] = rollout_with(make_policy(), spec, et.embodiment, env_seed).success;
    };

    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), jobs.size());
    if (workers <= 1) {
        for (const auto& j : jobs) run_job(j);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < jobs.size(); i += workers) run_job(jobs[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (auto& c : report.cells) c.successes = static_cast<int>(std::count(c.outcomes.begin(), c.outcomes.end(), true));
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
        double s = 0.0;
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) s += report.cells[ti * cfg.seeds.size() + si].rate();
        report.seed_rates.push_back(s / static_cast<double>(tasks.size()));
    }
    for (double r : report.seed_rates) report.mean += r;
    report.mean /= static_cast<double>(report.seed_rates.size());
    if (report.seed_rates.size() > 1) {
        double v = 0.0;
        for (double r : report.seed_rates) v += (r - report.mean) * (r - report.mean);
        report.std = std::sqrt(v / static_cast<double>(report.seed_rates.size() - 1));
    }
    return report;
}

EvalReport evaluate(const gen::GeneratorParams& params, const bank::MemoryBank& bank, const EvalConfig& cfg) {
    check_compatible(params, bank);
    EvalReport r = evaluate_policy([&] { return generator_policy(params, bank, cfg.retrieval); }, cfg);
    r.bank_hash = bank::bank_checksum(bank);
    return r;
}

}  // namespace raea::eval
