// SPDX-License-Identifier: Apache-2.0
#include "raea/cli/config.hpp"

#include <charconv>
#include <set>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"

namespace raea::cli {

using nlohmann::json;

namespace {

/// Walks a JSON document, collecting every failure with its pointer.
class Reader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& ptr, const std::string& msg) { errors.push_back((ptr.empty() ? "/" : ptr) + ": " + msg); }

    /// True when `j` is an object; reports keys outside `allowed`.
    bool object(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            fail(ptr, "expected an object");
            return false;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j.items())
            if (!ok.count(k)) fail(ptr + "/" + k, "unknown key");
        return true;
    }

    bool integer(const json& j, const std::string& key, const std::string& ptr, std::int64_t lo, std::int64_t& out) {
        if (!j.contains(key)) return false;
        const json& v = j.at(key);
        if (!v.is_number_integer()) {
            fail(ptr + "/" + key, "expected an integer");
            return false;
        }
        const std::int64_t x = v.is_number_unsigned() && v.get<std::uint64_t>() > INT64_MAX ? INT64_MAX : v.get<std::int64_t>();
        if (x < lo) {
            fail(ptr + "/" + key, "must be >= " + std::to_string(lo));
            return false;
        }
        out = x;
        return true;
    }

    void int_field(const json& j, const std::string& key, const std::string& ptr, int lo, int& out) {
        std::int64_t x = out;
        if (integer(j, key, ptr, lo, x)) {
            if (x > INT32_MAX) {
                fail(ptr + "/" + key, "is too large");
                return;
            }
            out = static_cast<int>(x);
        }
    }

    void i64_field(const json& j, const std::string& key, const std::string& ptr, std::int64_t lo, std::int64_t& out) {
        integer(j, key, ptr, lo, out);
    }

    void u64_field(const json& j, const std::string& key, const std::string& ptr, std::uint64_t& out) {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(ptr + "/" + key, "expected an unsigned integer");
            return;
        }
        out = v.get<std::uint64_t>();
    }

    /// Range check lo < x <= hi or lo <= x < hi depending on the flags.
    void real_field(const json& j, const std::string& key, const std::string& ptr, double& out, double lo, double hi,
                    bool lo_open, bool hi_open, const std::string& range) {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_number()) {
            fail(ptr + "/" + key, "expected a number");
            return;
        }
        const double x = v.get<double>();
        const bool lo_ok = lo_open ? x > lo : x >= lo;
        const bool hi_ok = hi_open ? x < hi : x <= hi;
        if (!(lo_ok && hi_ok)) {
            fail(ptr + "/" + key, "must lie in " + range);
            return;
        }
        out = x;
    }

    void bool_field(const json& j, const std::string& key, const std::string& ptr, bool& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_boolean()) {
            fail(ptr + "/" + key, "expected a boolean");
            return;
        }
        out = j.at(key).get<bool>();
    }

    bool string_field(const json& j, const std::string& key, const std::string& ptr, std::string& out) {
        if (!j.contains(key)) return false;
        if (!j.at(key).is_string()) {
            fail(ptr + "/" + key, "expected a string");
            return false;
        }
        out = j.at(key).get<std::string>();
        return true;
    }

    /// Parses a string with `parse`, reporting its error message on failure.
    template <class T, class F>
    void enum_field(const json& j, const std::string& key, const std::string& ptr, T& out, F parse) {
        std::string s;
        if (!string_field(j, key, ptr, s)) return;
        try {
            out = parse(s);
        } catch (const Error& e) {
            fail(ptr + "/" + key, e.what());
        }
    }

    bool strings(const json& j, const std::string& key, const std::string& ptr, std::vector<std::string>& out) {
        if (!j.contains(key)) return false;
        const json& v = j.at(key);
        if (!v.is_array()) {
            fail(ptr + "/" + key, "expected an array of strings");
            return false;
        }
        std::vector<std::string> tmp;
        bool ok = true;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) {
                fail(ptr + "/" + key + "/" + std::to_string(i), "expected a string");
                ok = false;
            } else {
                tmp.push_back(v[i].get<std::string>());
            }
        }
        if (ok) out = std::move(tmp);
        return ok;
    }

    /// Validates each element with `check`, which throws on a bad entry.
    template <class F>
    void each(const std::vector<std::string>& items, const std::string& ptr, F check) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            try {
                check(items[i]);
            } catch (const Error& e) {
                fail(ptr + "/" + std::to_string(i), e.what());
            }
        }
    }
};

void read_data(Reader& r, const json& j, const std::string& p, eval::DataSpec& d) {
    if (!r.object(j, p,
                  {"train_tasks", "demos_per_task", "demo_counts", "train_embodiment", "demo_seed", "bank_tasks",
                   "bank_embodiments", "bank_episodes_per_task", "bank_seed", "eval_tasks", "eval_rollouts"}))
        return;
    if (r.strings(j, "train_tasks", p, d.train_tasks) && d.train_tasks.empty())
        r.fail(p + "/train_tasks", "must name at least one task");
    r.each(d.train_tasks, p + "/train_tasks", [](const std::string& t) { env::parse_task(t); });
    r.int_field(j, "demos_per_task", p, 1, d.demos_per_task);
    if (j.contains("demo_counts")) {
        const json& dc = j.at("demo_counts");
        if (!dc.is_object()) {
            r.fail(p + "/demo_counts", "expected an object");
        } else {
            d.demo_counts.clear();
            for (const auto& [task, n] : dc.items()) {
                const std::string q = p + "/demo_counts/" + task;
                if (!n.is_number_integer() || n.get<std::int64_t>() < 1 || n.get<std::int64_t>() > INT32_MAX) {
                    r.fail(q, "expected an integer >= 1");
                } else if (std::find(d.train_tasks.begin(), d.train_tasks.end(), task) == d.train_tasks.end()) {
                    r.fail(q, "not one of train_tasks");
                } else {
                    d.demo_counts[task] = n.get<int>();
                }
            }
        }
    }
    r.enum_field(j, "train_embodiment", p, d.train_embodiment,
                 [](const std::string& s) { return env::find_embodiment(s).id; });
    r.u64_field(j, "demo_seed", p, d.demo_seed);
    r.strings(j, "bank_tasks", p, d.bank_tasks);
    r.each(d.bank_tasks, p + "/bank_tasks", [](const std::string& t) { env::parse_task(t); });
    r.strings(j, "bank_embodiments", p, d.bank_embodiments);
    r.each(d.bank_embodiments, p + "/bank_embodiments", [](const std::string& e) { env::find_embodiment(e); });
    r.int_field(j, "bank_episodes_per_task", p, 1, d.bank_episodes_per_task);
    r.u64_field(j, "bank_seed", p, d.bank_seed);
    r.strings(j, "eval_tasks", p, d.eval_tasks);
    r.each(d.eval_tasks, p + "/eval_tasks", [](const std::string& t) { eval::parse_eval_task(t); });
    r.int_field(j, "eval_rollouts", p, 0, d.eval_rollouts);
}

void read_bank(Reader& r, const json& j, const std::string& p, bank::BankConfig& b) {
    if (!r.object(j, p, {"L", "stride", "instruction_modalities", "observation_modalities", "encoder_seed"})) return;
    r.int_field(j, "L", p, 1, b.L);
    r.int_field(j, "stride", p, 1, b.stride);
    r.u64_field(j, "encoder_seed", p, b.encoder_seed);
    for (const char* key : {"instruction_modalities", "observation_modalities"}) {
        std::vector<std::string> names;
        if (!r.strings(j, key, p, names)) continue;
        const bool instr = std::string(key) == "instruction_modalities";
        std::vector<env::Modality> ms;
        r.each(names, p + "/" + key, [&](const std::string& s) {
            const env::Modality m = env::parse_modality(s);
            if (env::is_instruction_modality(m) != instr)
                throw ConfigError("'" + s + "' is not an " + (instr ? "instruction" : "observation") + " modality");
            ms.push_back(m);
        });
        if (names.empty()) r.fail(p + "/" + key, "must list at least one modality");
        (instr ? b.modalities.instruction : b.modalities.observation) = ms;
    }
}

void read_retrieval(Reader& r, const json& j, const std::string& p, bank::RetrievalConfig& c) {
    if (!r.object(j, p,
                  {"k", "dup_threshold", "candidate_pool", "embodiment_filter", "query_dropout_rate", "dedup",
                   "per_step_retrieval"}))
        return;
    r.int_field(j, "k", p, 1, c.k);
    r.int_field(j, "candidate_pool", p, 1, c.candidate_pool);
    r.real_field(j, "dup_threshold", p, c.dup_threshold, 0.0, 1.0, true, false, "(0, 1]");
    r.real_field(j, "query_dropout_rate", p, c.query_dropout_rate, 0.0, 1.0, false, true, "[0, 1)");
    r.bool_field(j, "dedup", p, c.dedup);
    r.bool_field(j, "per_step_retrieval", p, c.per_step_retrieval);
    if (j.contains("embodiment_filter")) {
        if (j.at("embodiment_filter").is_null()) {
            c.embodiment_filter.reset();
        } else {
            std::vector<std::string> ids;
            if (r.strings(j, "embodiment_filter", p, ids)) {
                r.each(ids, p + "/embodiment_filter", [](const std::string& e) { env::find_embodiment(e); });
                c.embodiment_filter = std::set<std::string>(ids.begin(), ids.end());
            }
        }
    }
    if (c.candidate_pool < c.k) r.fail(p + "/candidate_pool", "must be >= k");
}

void read_generator(Reader& r, const json& j, const std::string& p, gen::GeneratorConfig& g) {
    if (!r.object(j, p,
                  {"d_model", "n_heads", "n_blocks", "ffn_hidden", "encoder_hidden", "conv_width", "sc_rates",
                   "attn_query_source", "fusion", "status_tokens", "feature_dim", "max_state_dim"}))
        return;
    r.int_field(j, "d_model", p, 1, g.d_model);
    r.int_field(j, "n_heads", p, 1, g.n_heads);
    r.int_field(j, "n_blocks", p, 1, g.n_blocks);
    r.int_field(j, "ffn_hidden", p, 1, g.ffn_hidden);
    r.int_field(j, "encoder_hidden", p, 1, g.encoder_hidden);
    r.int_field(j, "conv_width", p, 1, g.conv_width);
    if (g.conv_width % 2 == 0) r.fail(p + "/conv_width", "must be odd");
    if (g.d_model % g.n_heads != 0) r.fail(p + "/n_heads", "must divide d_model");
    if (j.contains("sc_rates")) {
        const json& v = j.at("sc_rates");
        if (!v.is_array()) {
            r.fail(p + "/sc_rates", "expected an array of integers");
        } else {
            g.sc_rates.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 1 || v[i].get<std::int64_t>() > 512)
                    r.fail(p + "/sc_rates/" + std::to_string(i), "expected an integer in [1, 512]");
                else
                    g.sc_rates.push_back(v[i].get<int>());
            }
            if (!g.sc_rates.empty() && static_cast<int>(v.size()) != g.n_heads)
                r.fail(p + "/sc_rates", "needs one rate per head");
        }
    }
    r.enum_field(j, "attn_query_source", p, g.attn_query_source,
                 [](const std::string& s) { return gen::parse_query_source(s); });
    r.enum_field(j, "fusion", p, g.fusion, [](const std::string& s) { return gen::parse_fusion(s); });
    r.enum_field(j, "status_tokens", p, g.status_tokens, [](const std::string& s) { return gen::parse_status_tokens(s); });
    r.int_field(j, "feature_dim", p, 1, g.feature_dim);
    if (g.feature_dim != static_cast<int>(enc::kEmbedDim))
        r.fail(p + "/feature_dim", "must equal the embedding width " + std::to_string(enc::kEmbedDim));
    r.int_field(j, "max_state_dim", p, 1, g.max_state_dim);
    if (g.max_state_dim != gen::kMaxStateDim) r.fail(p + "/max_state_dim", "is fixed at 9");
}

void read_train(Reader& r, const json& j, const std::string& p, train::TrainConfig& t) {
    if (!r.object(j, p,
                  {"base_lr", "weight_decay", "warmup_frac", "total_steps", "grad_clip", "batch_size", "optimizer",
                   "checkpoint_every"}))
        return;
    const double inf = std::numeric_limits<double>::infinity();
    r.real_field(j, "base_lr", p, t.base_lr, 0.0, inf, true, true, "(0, inf)");
    r.real_field(j, "weight_decay", p, t.weight_decay, 0.0, inf, false, true, "[0, inf)");
    r.real_field(j, "warmup_frac", p, t.warmup_frac, 0.0, 1.0, false, true, "[0, 1)");
    r.i64_field(j, "total_steps", p, 1, t.total_steps);
    r.real_field(j, "grad_clip", p, t.grad_clip, 0.0, inf, true, true, "(0, inf)");
    r.int_field(j, "batch_size", p, 1, t.batch_size);
    r.enum_field(j, "optimizer", p, t.optimizer, [](const std::string& s) { return train::parse_optimizer(s); });
    r.i64_field(j, "checkpoint_every", p, 0, t.checkpoint_every);
}

void read_eval(Reader& r, const json& j, const std::string& p, eval::EvalConfig& e) {
    if (!r.object(j, p, {"n_rollouts", "tasks", "seeds", "vary_templates"})) return;
    r.int_field(j, "n_rollouts", p, 1, e.n_rollouts);
    r.strings(j, "tasks", p, e.tasks);
    r.each(e.tasks, p + "/tasks", [](const std::string& t) { eval::parse_eval_task(t); });
    if (j.contains("seeds")) {
        const json& v = j.at("seeds");
        if (!v.is_array() || v.empty()) {
            r.fail(p + "/seeds", "expected a non-empty array of unsigned integers");
        } else {
            std::vector<std::uint64_t> seeds;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number_unsigned())
                    r.fail(p + "/seeds/" + std::to_string(i), "expected an unsigned integer");
                else
                    seeds.push_back(v[i].get<std::uint64_t>());
            }
            e.seeds = seeds;
        }
    }
    r.bool_field(j, "vary_templates", p, e.vary_templates);
}

json train_section(const train::TrainConfig& t) {
    return {{"base_lr", t.base_lr},
            {"weight_decay", t.weight_decay},
            {"warmup_frac", t.warmup_frac},
            {"total_steps", t.total_steps},
            {"grad_clip", t.grad_clip},
            {"batch_size", t.batch_size},
            {"optimizer", std::string(train::to_string(t.optimizer))},
            {"checkpoint_every", t.checkpoint_every}};
}

}  // namespace

eval::Arm RunConfig::base_arm() const {
    eval::Arm a = experiment.base;
    a.train.threads = threads;
    a.eval.threads = threads;
    return a;
}

std::string RunConfig::hash() const { return eval::arm_hash(experiment.base); }

json to_json(const RunConfig& c) {
    const eval::Arm& a = c.experiment.base;
    json e = eval::to_json(a.eval);
    e.erase("retrieval");
    return {{"seed", c.seed},
            {"out_dir", c.out_dir},
            {"threads", c.threads},
            {"data", eval::to_json(a.data)},
            {"bank", eval::to_json(a.bank)},
            {"retrieval", train::retrieval_to_json(a.train.retrieval)},
            {"generator", gen::to_json(a.train.generator)},
            {"train", train_section(a.train)},
            {"eval", e},
            {"splits", {{"unseen", eval::to_json(c.experiment.unseen)}, {"few_shot", eval::to_json(c.experiment.few_shot)}}}};
}

RunConfig validate_config(const json& doc) {
    Reader r;
    RunConfig c;
    eval::Arm& a = c.experiment.base;
    if (r.object(doc, "",
                 {"seed", "out_dir", "threads", "data", "bank", "retrieval", "generator", "train", "eval", "splits"})) {
        r.u64_field(doc, "seed", "", c.seed);
        r.string_field(doc, "out_dir", "", c.out_dir);
        r.int_field(doc, "threads", "", 1, c.threads);
        if (doc.contains("data")) read_data(r, doc.at("data"), "/data", a.data);
        if (doc.contains("bank")) read_bank(r, doc.at("bank"), "/bank", a.bank);
        if (doc.contains("retrieval")) read_retrieval(r, doc.at("retrieval"), "/retrieval", a.train.retrieval);
        if (doc.contains("generator")) read_generator(r, doc.at("generator"), "/generator", a.train.generator);
        if (doc.contains("train")) read_train(r, doc.at("train"), "/train", a.train);
        if (doc.contains("eval")) read_eval(r, doc.at("eval"), "/eval", a.eval);
        if (doc.contains("splits")) {
            const json& s = doc.at("splits");
            if (r.object(s, "/splits", {"unseen", "few_shot"})) {
                if (s.contains("unseen")) read_data(r, s.at("unseen"), "/splits/unseen", c.experiment.unseen);
                if (s.contains("few_shot")) read_data(r, s.at("few_shot"), "/splits/few_shot", c.experiment.few_shot);
            }
        }
    }
    a.eval.retrieval = a.train.retrieval;
    a.train.seed = c.seed;
    if (r.errors.empty()) {
        // Cross-field rules the per-field checks cannot see.
        auto check = [&](const std::string& ptr, auto&& fn) {
            try {
                fn();
            } catch (const ValidationError& e) {
                for (const auto& f : e.failures()) r.fail(ptr, f);
            } catch (const Error& e) {
                r.fail(ptr, e.what());
            }
        };
        check("/data", [&] { a.data.validate(); });
        check("/splits/unseen", [&] { c.experiment.unseen.validate(); });
        check("/splits/few_shot", [&] { c.experiment.few_shot.validate(); });
        check("/train", [&] { a.train.validate(); });
    }
    if (!r.errors.empty()) throw ValidationError(r.errors);
    return c;
}

std::uint64_t parse_seed(const std::string& text) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ValidationError({"RAEA_SEED: '" + text + "' is not an unsigned integer"});
    return v;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::optional<std::string>& seed_override) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError({path.string() + ": not valid JSON (" + e.what() + ")"});
    }
    if (seed_override) {
        const std::uint64_t s = parse_seed(*seed_override);
        if (doc.is_object()) doc["seed"] = s;
    }
    return validate_config(doc);
}

}  // namespace raea::cli
