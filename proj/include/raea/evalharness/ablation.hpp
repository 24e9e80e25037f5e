// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "raea/evalharness/eval.hpp"
#include "raea/evalharness/report.hpp"
#include "raea/trainer/trainer.hpp"

namespace raea::eval {

/// Which demonstrations a run trains on, which episodes fill its bank and
/// which tasks it is evaluated on.
struct DataSpec {
    std::vector<std::string> train_tasks;
    int demos_per_task = 10;
    /// Per-task demo counts overriding demos_per_task.
    std::map<std::string, int> demo_counts;
    std::string train_embodiment = "franka";
    std::uint64_t demo_seed = 0;
    /// Empty means the training tasks.
    std::vector<std::string> bank_tasks;
    /// Empty means every built-in embodiment.
    std::vector<std::string> bank_embodiments;
    int bank_episodes_per_task = 4;
    std::uint64_t bank_seed = 100000;
    /// Empty means the training tasks.
    std::vector<std::string> eval_tasks;
    /// Rollouts per (task, seed) on this split; 0 keeps the eval config's count.
    int eval_rollouts = 0;

    void validate() const;
    friend bool operator==(const DataSpec&, const DataSpec&) = default;
};

nlohmann::json to_json(const DataSpec& d);
nlohmann::json to_json(const bank::BankConfig& b);
nlohmann::json to_json(const EvalConfig& e);

/// Three franka tasks, ten demos each.
DataSpec desk_data();
/// Reach on two object combos; the other ten combos only exist in the bank.
DataSpec unseen_object_data();
/// The desk tasks plus two tasks trained from five demos each.
DataSpec few_shot_data();

/// Everything needed to produce one trained and evaluated policy.
struct Arm {
    DataSpec data;
    bank::BankConfig bank;
    train::TrainConfig train;
    EvalConfig eval;
};

/// The desk data with default bank, training and eval settings.
Arm desk_arm();

/// Eval tasks and rollouts resolved from the data spec when the eval config has none.
Arm resolve(Arm arm);
nlohmann::json to_json(const Arm& arm);
/// Hash of the canonical JSON form of the resolved arm.
std::string arm_hash(const Arm& arm);

struct Artifacts {
    std::vector<env::Episode> demos;
    std::vector<env::Episode> bank_episodes;
    bank::MemoryBank bank;
};

/// Expert demos and bank for an arm; gripper tasks skip gripperless bank embodiments.
Artifacts build_artifacts(const Arm& arm);

struct ArmResult {
    std::string hash;
    train::TrainState state;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    EvalReport report;
};

/// Trains and evaluates arms, memoised by arm hash. With a cache directory
/// checkpoints are stored as <hash>.ckpt and reused across processes.
class ArmRunner {
public:
    explicit ArmRunner(std::filesystem::path cache_dir = {}, std::function<void(const std::string&)> log = {});
    const ArmResult& run(const Arm& arm);
    std::size_t trainings() const noexcept { return trainings_; }

private:
    std::filesystem::path cache_dir_;
    std::function<void(const std::string&)> log_;
    std::map<std::string, std::unique_ptr<ArmResult>> done_;
    std::size_t trainings_ = 0;
};

enum class Suite { modalities, status_info, embodiments, fusion, diversity, memory_bank_onoff };

inline constexpr std::array kAllSuites{Suite::modalities, Suite::status_info, Suite::embodiments,
                                       Suite::fusion,     Suite::diversity,   Suite::memory_bank_onoff};

std::string_view to_string(Suite s);
Suite parse_suite(std::string_view s);

struct Experiment {
    Arm base = desk_arm();
    DataSpec unseen = unseen_object_data();
    DataSpec few_shot = few_shot_data();
};

struct Variant {
    std::string name;
    Arm arm;
    /// Hash of the run this variant's control arm must equal.
    std::string control_of;
};

/// Variants of a suite, control arms first.
std::vector<Variant> suite_variants(Suite suite, const Experiment& ex);

/// The base arm moved onto another data split.
Arm on_split(const Arm& base, const DataSpec& split);

struct SuiteResult {
    Table table;
    /// Per variant: its hash and whether it is a control arm.
    std::vector<std::pair<std::string, bool>> arms;
    bool controls_match = true;
};

SuiteResult run_ablation(Suite suite, const Experiment& ex, ArmRunner& runner);

}  // namespace raea::eval
