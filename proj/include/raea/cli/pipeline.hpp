// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "raea/cli/config.hpp"

namespace raea::cli {

namespace fs = std::filesystem;

/// Relative paths resolve against the output directory.
fs::path under(const fs::path& out_dir, const fs::path& p);

/// The base arm, or the base arm moved onto the "unseen" or "few_shot" split.
eval::Arm arm_for(const RunConfig& cfg, const std::string& split);

struct GenDemosArgs {
    std::string split = "base";
    fs::path demos = "demos.jsonl";
    fs::path bank_episodes = "bank_episodes.jsonl";
};
void gen_demos(const RunConfig& cfg, const GenDemosArgs& a, std::ostream& out);

struct BuildBankArgs {
    std::string split = "base";
    std::vector<fs::path> demos = {"bank_episodes.jsonl"};
    fs::path bank = "bank.jsonl";
    /// Window overrides; they become part of the config hash.
    std::optional<int> frag_len;
    std::optional<int> stride;
};
void build_bank(const RunConfig& cfg, const BuildBankArgs& a, std::ostream& out);

struct RetrieveArgs {
    fs::path bank = "bank.jsonl";
    /// "<file>:<episode>:<frame>", episode being an index into the demo file.
    std::string query_demo;
    std::optional<int> k;
    bool no_dedup = false;
};
void retrieve(const std::optional<RunConfig>& cfg, const fs::path& out_dir, const RetrieveArgs& a, std::ostream& out);

struct TrainArgs {
    std::string split = "base";
    fs::path demos = "demos.jsonl";
    fs::path bank = "bank.jsonl";
    fs::path checkpoint = "checkpoint.bin";
    fs::path log = "train_log.csv";
    std::optional<fs::path> resume;
    /// Stop early at this step (the checkpoint can be resumed later).
    std::optional<std::int64_t> until;
};
void train(const RunConfig& cfg, const TrainArgs& a, std::ostream& out);

struct EvalArgs {
    std::string split = "base";
    fs::path checkpoint = "checkpoint.bin";
    fs::path bank = "bank.jsonl";
    fs::path report = "report.csv";
    std::optional<std::string> format;
};
void evaluate(const RunConfig& cfg, const EvalArgs& a, std::ostream& out);

struct AblateArgs {
    std::string suite = "all";
    fs::path report;
    fs::path cache = "cache";
    std::optional<std::string> format;
};
void ablate(const RunConfig& cfg, const AblateArgs& a, std::ostream& out);

}  // namespace raea::cli
