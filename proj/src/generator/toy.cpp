// SPDX-License-Identifier: Apache-2.0
#include "raea/generator/toy.hpp"

#include "raea/common/rng.hpp"

namespace raea::gen {

namespace {

std::vector<double> normals(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

std::vector<RetrievedFragment> ToyInstance::retrieved() const {
    std::vector<RetrievedFragment> out;
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        out.push_back({static_cast<int>(i), 1.0 - 0.1 * static_cast<double>(i), &fragments[i], &features[i]});
    }
    return out;
}

ToyInstance make_toy_instance(const GeneratorConfig& cfg, std::uint64_t seed, int n_fragments, int fragment_len,
                              int action_dim, int proprio_dim) {
    Rng rng(derive_seed(seed, "toy"));
    const std::size_t fd = static_cast<std::size_t>(cfg.feature_dim);
    ToyInstance t;
    t.main.instruction.push_back({env::Modality::text, normals(rng, fd)});
    t.main.observation.push_back({env::Modality::state_vec, normals(rng, fd)});
    t.main.proprio = normals(rng, static_cast<std::size_t>(proprio_dim), 0.5);
    for (int i = 0; i < n_fragments; ++i) {
        bank::PolicyFragment f;
        f.id = i;
        f.embodiment_id = "toy";
        f.source = {"toy/" + std::to_string(i), 0};
        f.real_steps = fragment_len;
        f.instruction.push_back({env::Modality::text, {0, 1}, {}});
        f.observation.push_back({env::Modality::state_vec, {}, normals(rng, env::kStateVecSize)});
        for (int s = 0; s < fragment_len; ++s) {
            f.actions.push_back(normals(rng, static_cast<std::size_t>(action_dim), 0.5));
            f.proprio.push_back(normals(rng, static_cast<std::size_t>(proprio_dim), 0.5));
        }
        t.fragments.push_back(std::move(f));
        t.features.push_back({normals(rng, fd), normals(rng, fd)});
    }
    t.target = normals(rng, static_cast<std::size_t>(action_dim), 0.5);
    return t;
}

tensor::GradCheckReport check_forward_gradients(const GeneratorConfig& cfg, std::uint64_t seed,
                                                const tensor::GradCheckOptions& opts) {
    GeneratorParams params(cfg, seed);
    perturb(params, derive_seed(seed, "perturb"), 0.1);
    const ToyInstance toy = make_toy_instance(cfg, seed);
    const auto retrieved = toy.retrieved();
    const tensor::ScalarFn f = [&](tensor::Tape& tape, std::span<const Var> leaves) {
        ParamBinding pb(tape, params.store(), leaves);
        return action_loss(forward(pb, params, toy.main, retrieved), toy.target);
    };
    return tensor::grad_check(f, params.store().values(), opts);
}

void perturb(GeneratorParams& params, std::uint64_t seed, double scale) {
    auto& store = params.store();
    for (std::size_t i = 0; i < store.size(); ++i) {
        Rng rng(derive_seed(seed, store.name(i)));
        for (double& v : store[i].values()) v += scale * rng.normal();
    }
}

}  // namespace raea::gen
