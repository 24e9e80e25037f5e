// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "raea/common/rng.hpp"
#include "raea/generator/params.hpp"
#include "raea/tensor/adam.hpp"
#include "raea/trainer/dataset.hpp"

namespace raea::train {

enum class Optimizer { adamw, adam };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view s);

struct TrainConfig {
    double base_lr = 1e-3;
    double weight_decay = 1e-6;
    double warmup_frac = 0.05;
    std::int64_t total_steps = 5000;
    double grad_clip = 1.0;
    int batch_size = 16;
    std::uint64_t seed = 0;
    /// adamw decays weights decoupled from the gradient; adam adds the L2
    /// term to the gradient before the moment updates.
    Optimizer optimizer = Optimizer::adamw;
    /// 0 disables periodic checkpoints.
    std::int64_t checkpoint_every = 0;
    int threads = 1;
    bank::RetrievalConfig retrieval;
    gen::GeneratorConfig generator;

    void validate() const;
};

nlohmann::json retrieval_to_json(const bank::RetrievalConfig& r);
bank::RetrievalConfig retrieval_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LogRow {
    std::int64_t step = 0;
    double lr = 0.0;
    double loss = 0.0;
    double grad_norm = 0.0;  // after clipping
    friend bool operator==(const LogRow&, const LogRow&) = default;
};

struct TrainState {
    gen::GeneratorParams params;
    tensor::AdamState adam;
    std::int64_t step = 0;
    Rng rng;
    std::vector<LogRow> history;
};

/// Fresh parameters from the "init" stream of the seed, zero moments, step 0.
TrainState initial_state(const TrainConfig& cfg);

class Trainer {
public:
    /// Refuses (LeakageError) when the bank holds any training episode.
    Trainer(TrainConfig cfg, const Dataset& data, const bank::MemoryBank& bank);

    const TrainConfig& config() const noexcept { return cfg_; }

    /// One optimisation step: sample a batch, retrieve per sample in train
    /// mode, forward, loss, backward, clip, optimizer update.
    void step(TrainState& s) const;

    /// Steps until s.step == until; `on_checkpoint` fires every
    /// checkpoint_every steps.
    void run(TrainState& s, std::int64_t until,
             const std::function<void(const TrainState&)>& on_checkpoint = {}) const;

    /// Retrieval for one sample; empty for fusion none.
    bank::RetrievalResult retrieve_for(SampleRef r, enc::Mode mode, Rng& rng) const;

private:
    TrainConfig cfg_;
    const Dataset& data_;
    const bank::MemoryBank& bank_;
    RngRoots roots_;
};

/// Mean BC loss over every training sample with eval-mode retrieval.
double dataset_loss(const gen::GeneratorParams& params, const Dataset& data, const bank::MemoryBank& bank,
                    const bank::RetrievalConfig& retrieval);

/// "step,lr,loss,grad_norm" rows with shortest round-trip floats.
std::string log_csv(const std::vector<LogRow>& rows);

}  // namespace raea::train
