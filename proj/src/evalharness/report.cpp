// SPDX-License-Identifier: Apache-2.0
#include "raea/evalharness/report.hpp"

#include <charconv>
#include <sstream>

#include "json.hpp"
#include "raea/common/error.hpp"
#include "raea/common/io.hpp"

namespace raea::eval {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    return out;
}

}  // namespace

void append_report(Table& table, const std::string& suite, const std::string& variant, const EvalReport& report) {
    for (const auto& c : report.cells) table.rows.push_back({suite, variant, c.task, c.seed, c.successes, c.rollouts});
    table.variants.push_back(
        {suite, variant, report.config_hash, report.bank_hash, report.checkpoint_hash, report.mean, report.std});
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    throw ConfigError("unknown report format '" + s + "'");
}

ReportFormat format_for_path(const std::filesystem::path& p) {
    return p.extension() == ".json" ? ReportFormat::json : ReportFormat::csv;
}

std::string to_csv(const Table& table) {
    std::string out = "suite,variant,task,seed,successes,rollouts,rate\n";
    for (const auto& r : table.rows) {
        out += r.suite + "," + r.variant + "," + r.task + "," + std::to_string(r.seed) + "," +
               std::to_string(r.successes) + "," + std::to_string(r.rollouts) + "," + fmt(r.rate()) + "\n";
    }
    return out;
}

std::vector<ReportRow> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "suite,variant,task,seed,successes,rollouts,rate") {
        throw ConfigError("report csv: unexpected header");
    }
    std::vector<ReportRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 7) throw ConfigError("report csv: expected 7 fields in '" + line + "'");
        try {
            rows.push_back({f[0], f[1], f[2], std::stoull(f[3]), std::stoi(f[4]), std::stoi(f[5])});
        } catch (const std::exception&) {
            throw ConfigError("report csv: bad number in '" + line + "'");
        }
    }
    return rows;
}

std::string to_json_text(const Table& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"suite", r.suite},
                        {"variant", r.variant},
                        {"task", r.task},
                        {"seed", r.seed},
                        {"successes", r.successes},
                        {"rollouts", r.rollouts},
                        {"rate", r.rate()}});
    }
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : table.variants) {
        variants.push_back({{"suite", v.suite},
                            {"variant", v.variant},
                            {"config_hash", v.config_hash},
                            {"bank_hash", v.bank_hash},
                            {"checkpoint_hash", v.checkpoint_hash},
                            {"mean", v.mean},
                            {"std", v.std}});
    }
    return nlohmann::json{{"rows", rows}, {"variants", variants}}.dump(2) + "\n";
}

void emit_report(const Table& table, const std::filesystem::path& path, ReportFormat format) {
    atomic_write(path, format == ReportFormat::csv ? to_csv(table) : to_json_text(table));
}

}  // namespace raea::eval
