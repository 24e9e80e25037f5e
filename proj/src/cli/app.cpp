// SPDX-License-Identifier: Apache-2.0
#include "raea/cli/app.hpp"

#include <cstdlib>
#include <functional>

#include "CLI11.hpp"
#include "raea/cli/pipeline.hpp"
#include "raea/cli/selftest.hpp"
#include "raea/common/error.hpp"

namespace raea::cli {

namespace {

struct Globals {
    std::string config;
    std::string out_dir;
    int threads = 0;
};

RunConfig load(const Globals& g) {
    std::optional<std::string> seed;
    if (const char* s = std::getenv("RAEA_SEED"); s != nullptr && *s != '\0') seed = s;
    RunConfig cfg;
    if (g.config.empty()) {
        nlohmann::json doc = nlohmann::json::object();
        if (seed) doc["seed"] = parse_seed(*seed);
        cfg = validate_config(doc);
    } else {
        cfg = load_run_config(g.config, seed);
    }
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.threads > 0) cfg.threads = g.threads;
    return cfg;
}

void add_split(CLI::App* sub, std::string& split) {
    sub->add_option("--split", split, "Which task split to use")
        ->check(CLI::IsMember({"base", "unseen", "few_shot"}))
        ->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval-augmented imitation learning toolkit", "raea"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Run config (JSON); defaults are used when omitted");
    app.add_option("--out-dir", g.out_dir, "Directory that relative artifact paths resolve against");
    app.add_option("--threads", g.threads, "Cap on worker threads")->check(CLI::PositiveNumber);

    std::function<void()> action;

    GenDemosArgs gd;
    auto* s_gen = app.add_subcommand("gen-demos", "Generate training demos and bank episodes");
    add_split(s_gen, gd.split);
    s_gen->add_option("--demo-out", gd.demos, "Training demo file")->capture_default_str();
    s_gen->add_option("--bank-demo-out", gd.bank_episodes, "Bank episode file")->capture_default_str();
    s_gen->callback([&] { action = [&] { gen_demos(load(g), gd, out); }; });

    BuildBankArgs bb;
    std::vector<std::string> bank_demos;
    auto* s_bank = app.add_subcommand("build-bank", "Build a memory bank from episode files");
    add_split(s_bank, bb.split);
    s_bank->add_option("--demos", bank_demos, "Episode files (default bank_episodes.jsonl)");
    s_bank->add_option("--out", bb.bank, "Bank file")->capture_default_str();
    s_bank->add_option("--frag-len", bb.frag_len, "Fragment length override")->check(CLI::PositiveNumber);
    s_bank->add_option("--stride", bb.stride, "Fragment stride override")->check(CLI::PositiveNumber);
    s_bank->callback([&] {
        action = [&] {
            if (!bank_demos.empty()) bb.demos.assign(bank_demos.begin(), bank_demos.end());
            build_bank(load(g), bb, out);
        };
    });

    RetrieveArgs rt;
    auto* s_ret = app.add_subcommand("retrieve", "Print the fragments retrieved for one demo frame");
    s_ret->add_option("--bank", rt.bank, "Bank file")->capture_default_str();
    s_ret->add_option("--query-demo", rt.query_demo, "<file>:<episode>:<frame>")->required();
    s_ret->add_option("--k", rt.k, "Fragments to retrieve")->check(CLI::PositiveNumber);
    s_ret->add_flag("--no-dedup", rt.no_dedup, "Plain top-k without the similarity filter");
    s_ret->callback([&] {
        action = [&] {
            std::optional<RunConfig> cfg;
            if (!g.config.empty()) cfg = load(g);
            retrieve(cfg, cfg ? fs::path(cfg->out_dir) : fs::path(g.out_dir.empty() ? "." : g.out_dir), rt, out);
        };
    });

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "Train the generator");
    add_split(s_train, tr.split);
    s_train->add_option("--demos", tr.demos, "Training demo file")->capture_default_str();
    s_train->add_option("--bank", tr.bank, "Bank file")->capture_default_str();
    s_train->add_option("--checkpoint", tr.checkpoint, "Checkpoint to write")->capture_default_str();
    s_train->add_option("--log", tr.log, "Training log (CSV)")->capture_default_str();
    s_train->add_option("--resume", tr.resume, "Checkpoint to resume from");
    s_train->add_option("--until", tr.until, "Stop at this step")->check(CLI::NonNegativeNumber);
    s_train->callback([&] { action = [&] { train(load(g), tr, out); }; });

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "Roll out a checkpoint and write a success report");
    add_split(s_eval, ev.split);
    s_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->capture_default_str();
    s_eval->add_option("--bank", ev.bank, "Bank file")->capture_default_str();
    s_eval->add_option("--out", ev.report, "Report file (.csv or .json)")->capture_default_str();
    s_eval->add_option("--format", ev.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s_eval->callback([&] { action = [&] { evaluate(load(g), ev, out); }; });

    AblateArgs ab;
    auto* s_ab = app.add_subcommand("ablate", "Run ablation suites end to end");
    s_ab->add_option("--suite", ab.suite, "Suite name or all")->capture_default_str();
    s_ab->add_option("--out", ab.report, "Report file (default <suite>.csv)");
    s_ab->add_option("--cache", ab.cache, "Directory of trained arms")->capture_default_str();
    s_ab->add_option("--format", ab.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    s_ab->callback([&] { action = [&] { ablate(load(g), ab, out); }; });

    int selftest_code = kExitOk;
    auto* s_self = app.add_subcommand("selftest", "Gradient and retrieval checks");
    s_self->callback([&] { action = [&] { selftest_code = print_selftest(run_selftest(), out) ? kExitOk : kExitFailure; }; });

    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" || a == "--out-dir" || a == "--threads") {
            ++i;
            continue;
        }
        if (a.starts_with("-")) continue;
        if (app.get_subcommand_no_throw(a) == nullptr) {
            err << "usage: unknown subcommand '" << a << "'\n";
            return kExitUsage;
        }
        break;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        action();
        return selftest_code;
    } catch (const ConfigError& e) {
        err << "usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ValidationError& e) {
        for (const auto& f : e.failures()) err << "validation: " << f << "\n";
        return kExitFailure;
    } catch (const Error& e) {
        err << e.kind() << ": " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace raea::cli
