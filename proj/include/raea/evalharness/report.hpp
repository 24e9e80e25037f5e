// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raea/evalharness/eval.hpp"

namespace raea::eval {

struct ReportRow {
    std::string suite;
    std::string variant;
    std::string task;
    std::uint64_t seed = 0;
    int successes = 0;
    int rollouts = 0;
    double rate() const { return rollouts ? static_cast<double>(successes) / rollouts : 0.0; }
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Per-variant metadata carried by the JSON form.
struct VariantMeta {
    std::string suite;
    std::string variant;
    std::string config_hash;
    std::string bank_hash;
    std::string checkpoint_hash;
    double mean = 0.0;
    double std = 0.0;
};

struct Table {
    std::vector<ReportRow> rows;
    std::vector<VariantMeta> variants;
};

/// One row per (task, seed) cell, in the report's cell order.
void append_report(Table& table, const std::string& suite, const std::string& variant, const EvalReport& report);

enum class ReportFormat { csv, json };
ReportFormat parse_report_format(const std::string& s);
/// csv when the extension is .csv, json when it is .json.
ReportFormat format_for_path(const std::filesystem::path& p);

/// Columns suite,variant,task,seed,successes,rollouts,rate.
std::string to_csv(const Table& table);
std::vector<ReportRow> parse_csv(const std::string& text);
std::string to_json_text(const Table& table);

void emit_report(const Table& table, const std::filesystem::path& path, ReportFormat format);

}  // namespace raea::eval
