// SPDX-License-Identifier: Apache-2.0
#include "raea/cli/pipeline.hpp"

#include <chrono>
#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"
#include "raea/common/rng.hpp"
#include "raea/envsim/demos.hpp"
#include "raea/trainer/checkpoint.hpp"

namespace raea::cli {

using nlohmann::json;

fs::path under(const fs::path& out_dir, const fs::path& p) { return p.is_absolute() ? p : out_dir / p; }

eval::Arm arm_for(const RunConfig& cfg, const std::string& split) {
    const eval::Arm base = cfg.base_arm();
    if (split == "base") return base;
    if (split == "unseen") return eval::on_split(base, cfg.experiment.unseen);
    if (split == "few_shot") return eval::on_split(base, cfg.experiment.few_shot);
    throw ConfigError("unknown split '" + split + "' (expected base, unseen or few_shot)");
}

namespace {

fs::path out_path(const RunConfig& cfg, const fs::path& p) {
    const fs::path full = under(cfg.out_dir, p);
    if (full.has_parent_path()) fs::create_directories(full.parent_path());
    return full;
}

eval::ReportFormat pick_format(const std::optional<std::string>& f, const fs::path& p) {
    return f ? eval::parse_report_format(*f) : eval::format_for_path(p);
}

void write_table(const eval::Table& t, const fs::path& path, eval::ReportFormat fmt) {
    eval::emit_report(t, path, fmt);
    if (fmt == eval::ReportFormat::csv) {
        // The csv columns are fixed; run hashes go to a sidecar.
        json meta = json::parse(eval::to_json_text(t)).at("variants");
        atomic_write(path.string() + ".meta.json", json{{"variants", meta}}.dump(2) + "\n");
    }
}

/// Demo files record the config hash on every line; a file from another
/// config would train a different model than the hash claims.
std::vector<env::Episode> load_matching_demos(const fs::path& path, const std::string& hash) {
    const std::string text = read_file(path);
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.contains("config_hash") && j["config_hash"] != hash) {
            throw MismatchError(path.string() + " was generated from config " + j["config_hash"].get<std::string>() +
                                ", this run is " + hash);
        }
    }
    return env::parse_demos(text);
}

}  // namespace

void gen_demos(const RunConfig& cfg, const GenDemosArgs& a, std::ostream& out) {
    const eval::Arm arm = eval::resolve(arm_for(cfg, a.split));
    const std::string hash = eval::arm_hash(arm);
    eval::Artifacts art = eval::build_artifacts(arm);
    env::save_demos(out_path(cfg, a.demos), art.demos, hash);
    env::save_demos(out_path(cfg, a.bank_episodes), art.bank_episodes, hash);
    out << "wrote " << art.demos.size() << " training demos and " << art.bank_episodes.size()
        << " bank episodes (config " << hash << ")\n";
}

void build_bank(const RunConfig& cfg, const BuildBankArgs& a, std::ostream& out) {
    eval::Arm arm = arm_for(cfg, a.split);
    if (a.frag_len) arm.bank.L = *a.frag_len;
    if (a.stride) arm.bank.stride = *a.stride;
    arm = eval::resolve(arm);
    bank::BankConfig bc = arm.bank;
    bc.config_hash = eval::arm_hash(arm);
    std::vector<env::Episode> episodes;
    for (const auto& p : a.demos) {
        auto eps = env::load_demos(under(cfg.out_dir, p));
        episodes.insert(episodes.end(), std::make_move_iterator(eps.begin()), std::make_move_iterator(eps.end()));
    }
    const bank::MemoryBank b = bank::build_bank(episodes, bc);
    bank::save_bank(b, out_path(cfg, a.bank));
    out << "wrote bank with " << b.size() << " fragments (checksum " << bank::bank_checksum(b) << ", config "
        << bc.config_hash << ")\n";
}

void retrieve(const std::optional<RunConfig>& cfg, const fs::path& out_dir, const RetrieveArgs& a, std::ostream& out) {
    const bank::MemoryBank b = bank::load_bank(under(out_dir, a.bank));
    bank::RetrievalConfig rc = cfg ? cfg->experiment.base.eval.retrieval : bank::RetrievalConfig{};
    if (a.k) {
        rc.k = *a.k;
        rc.candidate_pool = std::max(rc.candidate_pool, rc.k);
    }
    if (a.no_dedup) rc.dedup = false;
    rc.validate();

    const auto second = a.query_demo.rfind(':');
    const auto first = second == std::string::npos || second == 0 ? std::string::npos : a.query_demo.rfind(':', second - 1);
    if (first == std::string::npos) throw ConfigError("--query-demo expects <file>:<episode>:<frame>");
    std::size_t episode = 0, frame = 0;
    try {
        episode = std::stoul(a.query_demo.substr(first + 1, second - first - 1));
        frame = std::stoul(a.query_demo.substr(second + 1));
    } catch (const std::logic_error&) {
        throw ConfigError("--query-demo expects numeric episode and frame");
    }
    const auto demos = env::load_demos(under(out_dir, a.query_demo.substr(0, first)));
    if (episode >= demos.size()) throw ConfigError("episode " + std::to_string(episode) + " out of range");
    const env::Episode& ep = demos[episode];
    if (frame >= ep.steps.size()) throw ConfigError("frame " + std::to_string(frame) + " out of range");

    Rng unused(0);
    const auto hits = bank::retrieve(b, bank::make_query(ep, frame, b.config().modalities), rc, enc::Mode::eval, unused);
    json list = json::array();
    for (const auto& h : hits) {
        const auto& f = b.fragment(h.id);
        list.push_back({{"id", h.id},
                        {"score", h.score},
                        {"episode", f.source.episode_id},
                        {"start_frame", f.source.start_frame},
                        {"embodiment", f.embodiment_id}});
    }
    out << json{{"query", {{"episode", ep.id}, {"frame", frame}}}, {"k", rc.k}, {"hits", list}}.dump() << "\n";
}

void train(const RunConfig& cfg, const TrainArgs& a, std::ostream& out) {
    const eval::Arm arm = eval::resolve(arm_for(cfg, a.split));
    const std::string hash = eval::arm_hash(arm);
    const auto demos = load_matching_demos(under(cfg.out_dir, a.demos), hash);
    const bank::MemoryBank b = bank::load_bank(under(cfg.out_dir, a.bank));
    if (!b.config().config_hash.empty() && b.config().config_hash != hash) {
        throw MismatchError("bank was built from config " + b.config().config_hash + ", this run is " + hash);
    }
    if (b.config().modalities != arm.bank.modalities) throw MismatchError("bank modalities differ from the config");
    train::Dataset data(demos, b.encoder(), b.config().modalities);
    train::Trainer trainer(arm.train, data, b);
    const std::string bank_hash = bank::bank_checksum(b);

    train::TrainState s = train::initial_state(arm.train);
    if (a.resume) {
        train::Checkpoint c = train::load_checkpoint(under(cfg.out_dir, *a.resume));
        if (c.config_hash != hash) throw MismatchError("checkpoint config " + c.config_hash + " differs from " + hash);
        if (!c.bank_hash.empty() && c.bank_hash != bank_hash) throw MismatchError("checkpoint was trained on another bank");
        s = std::move(c.state);
        out << "resumed at step " << s.step << "\n";
    }
    const fs::path ckpt = out_path(cfg, a.checkpoint);
    const std::int64_t until = a.until ? std::min(*a.until, arm.train.total_steps) : arm.train.total_steps;
    const double before = train::dataset_loss(s.params, data, b, arm.train.retrieval);
    const auto t0 = std::chrono::steady_clock::now();
    trainer.run(s, until, [&](const train::TrainState& st) { train::save_checkpoint(arm.train, st, ckpt, hash, bank_hash); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    train::save_checkpoint(arm.train, s, ckpt, hash, bank_hash);
    atomic_write(out_path(cfg, a.log), train::log_csv(s.history));
    const double after = train::dataset_loss(s.params, data, b, arm.train.retrieval);
    out << "trained to step " << s.step << " in " << secs << " s; dataset loss " << before << " -> " << after
        << " (config " << hash << ")\n";
}

void evaluate(const RunConfig& cfg, const EvalArgs& a, std::ostream& out) {
    const eval::Arm arm = eval::resolve(arm_for(cfg, a.split));
    const fs::path ckpt_path = under(cfg.out_dir, a.checkpoint);
    const train::Checkpoint c = train::load_checkpoint(ckpt_path);
    const bank::MemoryBank b = bank::load_bank(under(cfg.out_dir, a.bank));
    eval::check_pairing(c, b);

    eval::EvalReport r = eval::evaluate(c.state.params, b, arm.eval);
    r.config_hash = c.config_hash;
    r.checkpoint_hash = hex64(fnv1a64(read_file(ckpt_path)));
    eval::Table t;
    eval::append_report(t, "eval", std::string(gen::to_string(c.state.params.config().fusion)), r);
    const fs::path report = out_path(cfg, a.report);
    write_table(t, report, pick_format(a.format, report));
    out << "success " << r.mean << " +- " << r.std << " over " << arm.eval.seeds.size() << " seeds\n";
}

void ablate(const RunConfig& cfg, const AblateArgs& a, std::ostream& out) {
    std::vector<eval::Suite> suites;
    if (a.suite == "all") {
        suites.assign(eval::kAllSuites.begin(), eval::kAllSuites.end());
    } else {
        suites.push_back(eval::parse_suite(a.suite));
    }
    eval::Experiment ex = cfg.experiment;
    ex.base = cfg.base_arm();
    eval::ArmRunner runner(under(cfg.out_dir, a.cache), [&](const std::string& msg) { out << msg << "\n" << std::flush; });
    eval::Table all;
    for (eval::Suite s : suites) {
        eval::SuiteResult r = eval::run_ablation(s, ex, runner);
        if (!r.controls_match) throw MismatchError(std::string(eval::to_string(s)) + ": control arm differs from the base run");
        for (std::size_t i = 0; i < r.table.variants.size(); ++i) {
            const auto& v = r.table.variants[i];
            out << eval::to_string(s) << " " << v.variant << " " << v.mean << " +- " << v.std << "\n";
        }
        all.rows.insert(all.rows.end(), r.table.rows.begin(), r.table.rows.end());
        all.variants.insert(all.variants.end(), r.table.variants.begin(), r.table.variants.end());
    }
    const fs::path report = out_path(cfg, a.report.empty() ? fs::path(a.suite + ".csv") : a.report);
    write_table(all, report, pick_format(a.format, report));
    out << "trained " << runner.trainings() << " arms; wrote " << report.string() << "\n";
}

}  // namespace raea::cli
