// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "raea/generator/model.hpp"
#include "raea/tensor/grad_check.hpp"

namespace raea::gen {

/// Small synthetic forward instance: a four-token main input (instruction,
/// observation, proprioception, readout) and `n_fragments` retrieved
/// fragments of `fragment_len` steps with random cached features.
struct ToyInstance {
    MainInput main;
    std::vector<bank::PolicyFragment> fragments;
    std::vector<std::vector<std::vector<double>>> features;
    std::vector<double> target;

    std::vector<RetrievedFragment> retrieved() const;
};

ToyInstance make_toy_instance(const GeneratorConfig& cfg, std::uint64_t seed, int n_fragments = 2,
                              int fragment_len = 3, int action_dim = 3, int proprio_dim = 4);

/// Finite-difference check of forward + bc_loss on the toy instance.
tensor::GradCheckReport check_forward_gradients(const GeneratorConfig& cfg, std::uint64_t seed,
                                                const tensor::GradCheckOptions& opts = {});

/// Adds N(0, scale^2) noise to every parameter, so gains, biases and
/// separator tokens are all away from their initial values. Noise is keyed
/// by parameter name, like the initialisation.
void perturb(GeneratorParams& params, std::uint64_t seed, double scale);

}  // namespace raea::gen
