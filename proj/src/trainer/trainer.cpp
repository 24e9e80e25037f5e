// SPDX-License-Identifier: Apache-2.0
#include "raea/trainer/trainer.hpp"

#include <charconv>
#include <thread>

#include "raea/common/error.hpp"
#include "raea/trainer/schedule.hpp"

namespace raea::train {

using nlohmann::json;
using tensor::Tape;
using tensor::Tensor;
using tensor::ParamStore;
using tensor::Var;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace

std::string_view to_string(Optimizer o) { return o == Optimizer::adamw ? "adamw" : "adam"; }

Optimizer parse_optimizer(std::string_view s) {
    if (s == "adamw") return Optimizer::adamw;
    if (s == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
    if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) throw ConfigError("warmup_frac must lie in [0, 1)");
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    retrieval.validate();
    generator.validate();
}

json retrieval_to_json(const bank::RetrievalConfig& r) {
    json j{{"k", r.k},
           {"dup_threshold", r.dup_threshold},
           {"candidate_pool", r.candidate_pool},
           {"query_dropout_rate", r.query_dropout_rate},
           {"dedup", r.dedup},
           {"per_step_retrieval", r.per_step_retrieval}};
    j["embodiment_filter"] = r.embodiment_filter ? json(*r.embodiment_filter) : json(nullptr);
    return j;
}

bank::RetrievalConfig retrieval_from_json(const json& j) {
    bank::RetrievalConfig r;
    r.k = j.at("k").get<int>();
    r.dup_threshold = j.at("dup_threshold").get<double>();
    r.candidate_pool = j.at("candidate_pool").get<int>();
    r.query_dropout_rate = j.at("query_dropout_rate").get<double>();
    r.dedup = j.at("dedup").get<bool>();
    r.per_step_retrieval = j.at("per_step_retrieval").get<bool>();
    if (!j.at("embodiment_filter").is_null()) r.embodiment_filter = j.at("embodiment_filter").get<std::set<std::string>>();
    return r;
}

json to_json(const TrainConfig& c) {
    return {{"base_lr", c.base_lr},
            {"weight_decay", c.weight_decay},
            {"warmup_frac", c.warmup_frac},
            {"total_steps", c.total_steps},
            {"grad_clip", c.grad_clip},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"optimizer", to_string(c.optimizer)},
            {"checkpoint_every", c.checkpoint_every},
            {"threads", c.threads},
            {"retrieval", retrieval_to_json(c.retrieval)},
            {"generator", gen::to_json(c.generator)}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    try {
        c.base_lr = j.at("base_lr").get<double>();
        c.weight_decay = j.at("weight_decay").get<double>();
        c.warmup_frac = j.at("warmup_frac").get<double>();
        c.total_steps = j.at("total_steps").get<std::int64_t>();
        c.grad_clip = j.at("grad_clip").get<double>();
        c.batch_size = j.at("batch_size").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
        c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
        c.threads = j.at("threads").get<int>();
        c.retrieval = retrieval_from_json(j.at("retrieval"));
        c.generator = gen::generator_config_from_json(j.at("generator"));
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("train config: ") + ex.what());
    }
    c.validate();
    return c;
}

TrainState initial_state(const TrainConfig& cfg) {
    const RngRoots roots = seed_everything(cfg.seed);
    TrainState s{gen::GeneratorParams(cfg.generator, roots.init), {}, 0, Rng(roots.train), {}};
    s.adam = tensor::AdamState::zeros_like(s.params.store().values());
    return s;
}

Trainer::Trainer(TrainConfig cfg, const Dataset& data, const bank::MemoryBank& bank)
    : cfg_(std::move(cfg)), data_(data), bank_(bank), roots_(seed_everything(cfg_.seed)) {
    cfg_.validate();
    if (data_.size() == 0) throw ConfigError("no training samples");
    if (cfg_.generator.feature_dim != static_cast<int>(bank_.encoder().d_e())) {
        throw ConfigError("generator feature_dim must equal the bank embedding width");
    }
    if (!(data_.modalities() == bank_.config().modalities)) {
        throw MismatchError("training features and memory bank use different modalities");
    }
    check_disjoint(data_, bank_);
}

bank::RetrievalResult Trainer::retrieve_for(SampleRef r, enc::Mode mode, Rng& rng) const {
    if (cfg_.generator.fusion == gen::Fusion::none || bank_.empty()) return {};
    const enc::Query q =
        timed_query(data_.episode(r.episode), r.t, bank_.config().modalities, cfg_.retrieval.per_step_retrieval);
    return bank::retrieve(bank_, q, cfg_.retrieval, mode, rng);
}

void Trainer::step(TrainState& s) const {
    if (s.step >= cfg_.total_steps) throw ConfigError("training already reached total_steps");
    const std::size_t B = static_cast<std::size_t>(cfg_.batch_size);
    std::vector<SampleRef> batch(B);
    for (auto& r : batch) r = data_.ref(s.rng.index(data_.size()));

    const ParamStore& store = s.params.store();
    const double inv_b = 1.0 / static_cast<double>(B);
    std::vector<double> losses(B);

    // Each sample's gradient comes from its own tape; per-sample buffers are
    // summed in batch order, so the result does not depend on thread count.
    auto sample_grad = [&](std::size_t b, std::vector<Tensor>& out) {
        Rng drop(derive_seed(roots_.dropout, static_cast<std::uint64_t>(s.step), b));
        const SampleRef r = batch[b];
        const auto hits = retrieve_for(r, enc::Mode::train, drop);
        Tape tape;
        tensor::ParamBinding pb(tape, store);
        Var head = gen::forward(pb, s.params, data_.main_input(r), resolve(bank_, hits));
        Var loss = gen::action_loss(head, data_.target(r));
        losses[b] = loss.value()[0];
        tape.backward(tensor::scale(loss, inv_b));
        pb.accumulate_grads(out);
    };

    std::vector<Tensor> grads = store.zeros_like();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.threads), B);
    if (workers <= 1) {
        for (std::size_t b = 0; b < B; ++b) sample_grad(b, grads);
    } else {
        std::vector<std::vector<Tensor>> per(B);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t b = w; b < B; b += workers) {
                        per[b] = store.zeros_like();
                        sample_grad(b, per[b]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < grads.size(); ++i) grads[i].add_inplace(per[b][i]);
    }

    double loss = 0.0;
    for (double l : losses) loss += l;
    loss *= inv_b;

    auto& values = s.params.store().values();
    if (cfg_.optimizer == Optimizer::adam && cfg_.weight_decay > 0.0) {
        for (std::size_t i = 0; i < grads.size(); ++i)
            for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] += cfg_.weight_decay * values[i][j];
    }
    const double norm = clip_gradients(grads, cfg_.grad_clip);
    const double lr = lr_at(s.step + 1, cfg_.base_lr, cfg_.warmup_frac, cfg_.total_steps);
    tensor::AdamConfig ac;
    ac.lr = lr;
    ac.weight_decay = cfg_.optimizer == Optimizer::adamw ? cfg_.weight_decay : 0.0;
    tensor::adam_step(values, grads, s.adam, ac);

    s.history.push_back({s.step, lr, loss, norm});
    s.step += 1;
}

void Trainer::run(TrainState& s, std::int64_t until, const std::function<void(const TrainState&)>& on_checkpoint) const {
    if (until > cfg_.total_steps) throw ConfigError("cannot train past total_steps");
    while (s.step < until) {
        step(s);
        if (on_checkpoint && cfg_.checkpoint_every > 0 && s.step % cfg_.checkpoint_every == 0) on_checkpoint(s);
    }
}

double dataset_loss(const gen::GeneratorParams& params, const Dataset& data, const bank::MemoryBank& bank,
                    const bank::RetrievalConfig& retrieval) {
    const bool use_bank = params.config().fusion != gen::Fusion::none && !bank.empty();
    double total = 0.0;
    Rng unused(0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const SampleRef r = data.ref(i);
        bank::RetrievalResult hits;
        if (use_bank) {
            const enc::Query q =
                timed_query(data.episode(r.episode), r.t, bank.config().modalities, retrieval.per_step_retrieval);
            hits = bank::retrieve(bank, q, retrieval, enc::Mode::eval, unused);
        }
        Tape tape(false);
        tensor::ParamBinding pb(tape, params.store(), false);
        total += gen::action_loss(gen::forward(pb, params, data.main_input(r), resolve(bank, hits)), data.target(r))
                     .value()[0];
    }
    return total / static_cast<double>(data.size());
}

std::string log_csv(const std::vector<LogRow>& rows) {
    std::string out = "step,lr,loss,grad_norm\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step) + "," + fmt(r.lr) + "," + fmt(r.loss) + "," + fmt(r.grad_norm) + "\n";
    }
    return out;
}

}  // namespace raea::train
