// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "raea/envsim/world.hpp"
#include "raea/generator/params.hpp"
#include "raea/membank/bank.hpp"
#include "raea/trainer/checkpoint.hpp"

namespace raea::eval {

struct EvalTask {
    env::TaskSpec task;
    env::EmbodimentSpec embodiment;
};

/// "kind:color[:shape][@embodiment]", embodiment defaulting to franka.
EvalTask parse_eval_task(const std::string& text);
std::string eval_task_name(const EvalTask& t);

struct EvalConfig {
    int n_rollouts = 30;
    std::vector<std::string> tasks;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    bank::RetrievalConfig retrieval;
    /// Draw the instruction paraphrase per rollout instead of using template 0.
    bool vary_templates = true;
    int threads = 1;

    void validate() const;
};

/// Environment seed of one rollout, a keyed hash of (task, seed, rollout).
std::uint64_t rollout_seed(const std::string& task_name, std::uint64_t seed, int rollout);

/// What a policy sees at each step.
struct StepView {
    const env::WorldState& state;
    const env::TaskSpec& task;
    const env::EmbodimentSpec& embodiment;
    const std::vector<std::vector<double>>& frames;  // rendered images so far, oldest first
    int t;
};

using PolicyFn = std::function<std::vector<double>(const StepView&)>;

struct RolloutResult {
    bool success = false;
    int steps = 0;
};

/// Runs one episode from make_env(task, embodiment, env_seed); the first two
/// action dims are clipped to the embodiment's max_step before stepping.
RolloutResult rollout_with(const PolicyFn& policy, const env::TaskSpec& task, const env::EmbodimentSpec& embodiment,
                           std::uint64_t env_seed);

/// Throws MismatchError when the generator cannot consume the bank's features.
void check_compatible(const gen::GeneratorParams& params, const bank::MemoryBank& bank);

/// Throws MismatchError when a checkpoint was trained against a different
/// bank or config than the one supplied.
void check_pairing(const train::Checkpoint& ckpt, const bank::MemoryBank& bank);

/// Generator policy: retrieves at the first frame (and per step when
/// configured) in eval mode, then decodes one action per step.
PolicyFn generator_policy(const gen::GeneratorParams& params, const bank::MemoryBank& bank,
                          const bank::RetrievalConfig& retrieval);

RolloutResult rollout(const gen::GeneratorParams& params, const bank::MemoryBank& bank,
                      const bank::RetrievalConfig& retrieval, const EvalTask& task, std::uint64_t env_seed,
                      bool vary_template = true);

struct CellResult {
    std::string task;
    std::uint64_t seed = 0;
    int successes = 0;
    int rollouts = 0;
    std::vector<bool> outcomes;
    double rate() const { return rollouts ? static_cast<double>(successes) / rollouts : 0.0; }
};

struct EvalReport {
    std::vector<CellResult> cells;  // task-major, then seed
    std::vector<double> seed_rates;  // mean over tasks per seed
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation over seeds
    std::string config_hash, bank_hash, checkpoint_hash;
};

/// Evaluates an arbitrary policy over every (task, seed, rollout) cell.
EvalReport evaluate_policy(const std::function<PolicyFn()>& make_policy, const EvalConfig& cfg);

EvalReport evaluate(const gen::GeneratorParams& params, const bank::MemoryBank& bank, const EvalConfig& cfg);

}  // namespace raea::eval
