// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "raea/common/error.hpp"
#include "raea/trainer/checkpoint.hpp"
#include "raea/trainer/schedule.hpp"

using namespace raea;
using namespace raea::train;
using tensor::Tensor;

namespace {

struct Fixture {
    std::vector<env::Episode> demos;
    bank::MemoryBank bank;
    Dataset data;

    static Fixture make() {
        auto reach = env::parse_task("reach:red:circle");
        auto push = env::parse_task("push:blue:square");
        const auto& franka = env::find_embodiment("franka");
        std::vector<env::Episode> demos = env::generate_demos(reach, franka, 3, 0);
        auto more = env::generate_demos(push, franka, 2, 0);
        demos.insert(demos.end(), more.begin(), more.end());
        std::vector<env::Episode> bank_eps = env::generate_demos(reach, franka, 3, 500);
        more = env::generate_demos(push, env::find_embodiment("widowx"), 2, 500);
        bank_eps.insert(bank_eps.end(), more.begin(), more.end());
        bank::MemoryBank b = bank::build_bank(bank_eps, {});
        Dataset d(demos, b.encoder(), b.config().modalities);
        return {demos, std::move(b), std::move(d)};
    }
};

TrainConfig small_config() {
    TrainConfig c;
    c.total_steps = 40;
    c.batch_size = 4;
    c.generator.d_model = 16;
    c.generator.n_heads = 2;
    c.generator.n_blocks = 1;
    c.generator.ffn_hidden = 16;
    c.generator.encoder_hidden = 16;
    return c;
}

bool same_params(const TrainState& a, const TrainState& b) {
    const auto& x = a.params.store().values();
    const auto& y = b.params.store().values();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!tensor::bit_identical(x[i], y[i])) return false;
    return true;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
    const double base = 1e-3;
    const std::int64_t total = 1000;
    const std::int64_t w = warmup_steps(0.05, total);
    CHECK(w == 50);
    CHECK(lr_at(0, base, 0.05, total) == 0.0);
    CHECK(lr_at(w, base, 0.05, total) == doctest::Approx(base).epsilon(1e-15));
    CHECK(std::abs(lr_at(total, base, 0.05, total)) < 1e-12);
    CHECK(lr_at(25, base, 0.05, total) == doctest::Approx(base / 2).epsilon(1e-15));
    // Halfway through the decay the cosine factor is one half.
    CHECK(lr_at(w + (total - w) / 2, base, 0.05, total) ==
          doctest::Approx(base * 0.5 * (1 + std::cos(std::numbers::pi * 475.0 / 950.0))).epsilon(1e-14));
    CHECK(warmup_steps(0.05, 5000) == 250);
    CHECK(warmup_steps(0.05, 7) == 1);
    CHECK(lr_at(0, base, 0.0, 10) == base);
    CHECK_THROWS_AS(lr_at(11, base, 0.0, 10), ConfigError);

    double prev = 1.0;
    for (std::int64_t s = w; s <= total; ++s) {
        const double lr = lr_at(s, base, 0.05, total);
        CHECK(lr <= prev);
        prev = lr;
    }
}

TEST_CASE("gradient clipping") {
    std::vector<Tensor> g{Tensor::row({1.2, 0.0}), Tensor::row({0.0, 1.6})};
    CHECK(global_norm(g) == doctest::Approx(2.0));
    clip_gradients(g, 1.0);
    CHECK(g[0][0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(g[1][1] == doctest::Approx(0.8).epsilon(1e-15));

    std::vector<Tensor> small{Tensor::row({0.3, 0.4})};
    const auto before = small;
    CHECK(clip_gradients(small, 1.0) == doctest::Approx(0.5));
    CHECK(small == before);
    CHECK_THROWS_AS(clip_gradients(small, 0.0), ConfigError);

    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Tensor> r;
        const std::size_t n = 1 + rng.index(5);
        const double scale = std::exp(rng.uniform(-5.0, 5.0));
        for (std::size_t i = 0; i < n; ++i) {
            Tensor t = Tensor::matrix(1 + rng.index(4), 1 + rng.index(4));
            for (double& v : t.values()) v = scale * rng.normal();
            r.push_back(t);
        }
        const double max_norm = rng.uniform(0.1, 3.0);
        const double reported = clip_gradients(r, max_norm);
        CHECK(global_norm(r) <= max_norm + 1e-12);
        CHECK(reported == global_norm(r));
    }
}

TEST_CASE("train config validation and json") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.retrieval.k == 3);
    CHECK(c.retrieval.dup_threshold == 0.9);
    CHECK(c.retrieval.query_dropout_rate == 0.7);
    CHECK(c.weight_decay == 1e-6);
    CHECK(c.grad_clip == 1.0);
    CHECK(c.warmup_frac == 0.05);
    TrainConfig bad = c;
    bad.warmup_frac = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.total_steps = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    c.retrieval.embodiment_filter = std::set<std::string>{"franka"};
    c.optimizer = Optimizer::adam;
    TrainConfig back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.retrieval.embodiment_filter == c.retrieval.embodiment_filter);
}

TEST_CASE("dataset features and timing rule") {
    Fixture fx = Fixture::make();
    std::size_t steps = 0;
    for (const auto& ep : fx.demos) steps += ep.steps.size();
    CHECK(fx.data.size() == steps);
    SampleRef r = fx.data.ref(1);
    MainInput in = fx.data.main_input(r);
    CHECK(in.instruction.size() == 1);
    CHECK(in.observation.size() == 2);
    CHECK(in.proprio == fx.demos[r.episode].steps[r.t].proprio);
    CHECK(fx.data.target(r) == fx.demos[r.episode].steps[r.t].action);

    const auto& ep = fx.demos[0];
    const auto& mods = fx.bank.config().modalities;
    enc::Query q0 = timed_query(ep, 2, mods, false);
    CHECK(q0.instruction.size() == 1);
    CHECK(q0.observation[0].values == ep.observation(0, env::Modality::state_vec).values);
    enc::Query q2 = timed_query(ep, 2, mods, true);
    CHECK(q2.instruction.empty());
    CHECK(q2.observation[0].values == ep.observation(2, env::Modality::state_vec).values);
    CHECK(timed_query(ep, 0, mods, true).instruction.size() == 1);
}

TEST_CASE("leakage guard") {
    Fixture fx = Fixture::make();
    std::vector<env::Episode> leaky = {fx.demos[0]};
    bank::MemoryBank bad = bank::build_bank(leaky, {});
    CHECK_THROWS_AS(Trainer(small_config(), fx.data, bad), LeakageError);
    CHECK_NOTHROW(Trainer(small_config(), fx.data, fx.bank));
}

TEST_CASE("training is deterministic and independent of thread count") {
    Fixture fx = Fixture::make();
    TrainConfig cfg = small_config();
    Trainer tr(cfg, fx.data, fx.bank);
    TrainState a = initial_state(cfg);
    TrainState b = initial_state(cfg);
    tr.run(a, 20);
    tr.run(b, 20);
    CHECK(a.history == b.history);
    CHECK(same_params(a, b));
    for (const auto& row : a.history) CHECK(row.grad_norm <= cfg.grad_clip + 1e-12);

    TrainConfig threaded = cfg;
    threaded.threads = 3;
    Trainer tt(threaded, fx.data, fx.bank);
    TrainState c = initial_state(threaded);
    tt.run(c, 20);
    CHECK(c.history == a.history);
    CHECK(same_params(a, c));

    TrainConfig other = cfg;
    other.seed = 1;
    Trainer to(other, fx.data, fx.bank);
    TrainState d = initial_state(other);
    to.run(d, 5);
    CHECK_FALSE(d.history[0] == a.history[0]);

    CHECK_THROWS_AS(tr.run(a, cfg.total_steps + 1), ConfigError);
}

TEST_CASE("checkpoint roundtrip and resume equivalence") {
    Fixture fx = Fixture::make();
    TrainConfig cfg = small_config();
    cfg.checkpoint_every = 10;
    Trainer tr(cfg, fx.data, fx.bank);

    TrainState fresh = initial_state(cfg);
    Checkpoint c0 = parse_checkpoint(serialize_checkpoint(cfg, fresh, "abc"));
    CHECK(c0.state.step == 0);
    CHECK(c0.config_hash == "abc");
    CHECK(c0.bank_hash.empty());
    CHECK(parse_checkpoint(serialize_checkpoint(cfg, fresh, "abc", "bk")).bank_hash == "bk");
    CHECK(same_params(c0.state, fresh));

    TrainState full = initial_state(cfg);
    std::vector<std::string> snapshots;
    tr.run(full, 30, [&](const TrainState& s) { snapshots.push_back(serialize_checkpoint(cfg, s)); });
    CHECK(snapshots.size() == 3);

    TrainState half = initial_state(cfg);
    tr.run(half, 15);
    const std::string bytes = serialize_checkpoint(cfg, half, "h");
    Checkpoint ck = parse_checkpoint(bytes);
    CHECK(serialize_checkpoint(ck.config, ck.state, ck.config_hash) == bytes);
    CHECK(ck.state.step == 15);
    CHECK(ck.state.rng == half.rng);
    tr.run(ck.state, 30);
    CHECK(same_params(ck.state, full));
    CHECK(ck.state.history == full.history);
    CHECK(ck.state.adam.m == full.adam.m);

    SUBCASE("corruption is detected") {
        std::string flipped = bytes;
        flipped[flipped.size() / 2] ^= 0x01;
        CHECK_THROWS_AS(parse_checkpoint(flipped), CorruptCheckpoint);
        CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 9)), CorruptCheckpoint);
        CHECK_THROWS_AS(parse_checkpoint("RAEACKPT"), CorruptCheckpoint);
        CHECK_THROWS_AS(parse_checkpoint(std::string(100, 'x')), CorruptCheckpoint);
        std::string version = bytes;
        version[8] = 9;
        CHECK_THROWS_AS(parse_checkpoint(version), CorruptCheckpoint);
    }
}

TEST_CASE("training reduces the loss on a small problem") {
    Fixture fx = Fixture::make();
    TrainConfig cfg = small_config();
    cfg.total_steps = 300;
    cfg.batch_size = 8;
    cfg.base_lr = 3e-3;
    Trainer tr(cfg, fx.data, fx.bank);
    TrainState s = initial_state(cfg);
    const double before = dataset_loss(s.params, fx.data, fx.bank, cfg.retrieval);
    tr.run(s, cfg.total_steps);
    const double after = dataset_loss(s.params, fx.data, fx.bank, cfg.retrieval);
    MESSAGE("loss " << before << " -> " << after);
    CHECK(after < 0.5 * before);
    CHECK(s.params.all_finite());
}

TEST_CASE("log csv") {
    std::vector<LogRow> rows{{0, 0.0, 0.5, 1.0}, {1, 1e-3, 0.1, 0.25}};
    CHECK(log_csv(rows) == "step,lr,loss,grad_norm\n0,0,0.5,1\n1,0.001,0.1,0.25\n");
}
