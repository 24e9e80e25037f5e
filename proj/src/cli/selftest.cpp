// SPDX-License-Identifier: Apache-2.0
#include "raea/cli/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"
#include "raea/generator/toy.hpp"
#include "raea/membank/bank.hpp"
#include "raea/tensor/grad_check.hpp"
#include "raea/tensor/ops.hpp"

namespace raea::cli {

namespace {

using tensor::Tensor;
using tensor::Var;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.values()) v = rng.normal();
    return t;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

CheckResult op_gradient(const std::string& name, std::vector<Tensor> params, std::size_t out_rows, std::size_t out_cols,
                        const std::function<Var(std::span<const Var>)>& op, Rng& rng) {
    const Tensor w = random_tensor(out_rows, out_cols, rng);
    auto f = [&](tensor::Tape&, std::span<const Var> v) { return tensor::weighted_sum(op(v), w); };
    const auto rep = tensor::grad_check(f, params);
    return {"gradient " + name, rep.finite && rep.max_rel_error < 1e-6, "max rel err " + fmt(rep.max_rel_error)};
}

bank::PolicyFragment stub_fragment() {
    bank::PolicyFragment f;
    f.embodiment_id = "franka";
    f.source = {"selftest", 0};
    f.real_steps = 1;
    f.actions = {std::vector<double>(4, 0.0)};
    f.proprio = {std::vector<double>(4, 0.0)};
    return f;
}

std::vector<double> random_unit(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double n = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        n += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n);
    return v;
}

std::vector<int> brute_force(const bank::MemoryBank& b, const std::vector<double>& q, std::size_t k) {
    std::vector<std::pair<double, int>> s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const auto e = b.embedding(static_cast<int>(i));
        double d = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) d += q[j] * e[j];
        s.emplace_back(d, static_cast<int>(i));
    }
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<int> out;
    for (std::size_t i = 0; i < std::min(k, s.size()); ++i) out.push_back(s[i].second);
    return out;
}

gen::GeneratorConfig small_generator(gen::Fusion fusion, gen::QuerySource src) {
    gen::GeneratorConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_blocks = 2;
    c.ffn_hidden = 8;
    c.encoder_hidden = 6;
    c.feature_dim = 5;
    c.sc_rates = {1, 2};
    c.fusion = fusion;
    c.attn_query_source = src;
    return c;
}

Tensor run_forward(const gen::GeneratorParams& p, const gen::ToyInstance& toy,
                   const std::vector<gen::RetrievedFragment>& r) {
    tensor::Tape tape(false);
    tensor::ParamBinding pb(tape, p.store(), false);
    return gen::forward(pb, p, toy.main, r).value();
}

}  // namespace

std::vector<CheckResult> run_selftest() {
    std::vector<CheckResult> out;
    Rng rng(20240601);

    out.push_back(op_gradient("linear", {random_tensor(3, 4, rng), random_tensor(4, 2, rng), random_tensor(1, 2, rng)},
                              3, 2, [](std::span<const Var> v) { return tensor::linear(v[0], v[1], v[2]); }, rng));
    out.push_back(op_gradient("softmax_rows", {random_tensor(3, 4, rng)}, 3, 4,
                              [](std::span<const Var> v) { return tensor::softmax_rows(v[0]); }, rng));
    out.push_back(op_gradient("layer_norm", {random_tensor(2, 4, rng), random_tensor(1, 4, rng), random_tensor(1, 4, rng)},
                              2, 4, [](std::span<const Var> v) { return tensor::layer_norm(v[0], v[1], v[2]); }, rng));
    out.push_back(op_gradient("depthwise_conv1d", {random_tensor(5, 3, rng), random_tensor(3, 3, rng)}, 5, 3,
                              [](std::span<const Var> v) { return tensor::depthwise_conv1d(v[0], v[1]); }, rng));
    out.push_back(op_gradient("downsample_concat", {random_tensor(5, 3, rng), random_tensor(6, 3, rng)}, 3, 3,
                              [](std::span<const Var> v) { return tensor::downsample_concat(v[0], 2, v[1]); }, rng));

    for (auto fusion : {gen::Fusion::cross_attention, gen::Fusion::film, gen::Fusion::concat}) {
        for (auto src : {gen::QuerySource::main, gen::QuerySource::retrieved}) {
            if (fusion != gen::Fusion::cross_attention && src == gen::QuerySource::retrieved) continue;
            const auto rep = gen::check_forward_gradients(small_generator(fusion, src), 7);
            out.push_back({"gradient generator " + std::string(gen::to_string(fusion)) + "/" +
                               std::string(gen::to_string(src)),
                           rep.finite && rep.max_rel_error < 1e-4, "max rel err " + fmt(rep.max_rel_error)});
        }
    }

    {
        bool same = true;
        for (auto fusion : {gen::Fusion::cross_attention, gen::Fusion::film, gen::Fusion::concat}) {
            auto cfg = small_generator(fusion, gen::QuerySource::main);
            auto none = cfg;
            none.fusion = gen::Fusion::none;
            for (std::uint64_t s = 0; s < 5; ++s) {
                gen::GeneratorParams p(cfg, s), pn(none, s);
                const auto toy = gen::make_toy_instance(cfg, s + 50);
                same = same && tensor::bit_identical(run_forward(p, toy, {}), run_forward(pn, toy, {}));
            }
        }
        out.push_back({"empty retrieval equals no fusion", same, ""});
    }

    {
        gen::GeneratorParams p(small_generator(gen::Fusion::cross_attention, gen::QuerySource::main), 3);
        tensor::Tape tape(false);
        tensor::ParamBinding pb(tape, p.store(), false);
        bool ok = true;
        try {
            gen::encode_state_tokens(pb, p, {std::vector<double>(9, 0.1)}, gen::StateKind::action);
        } catch (const Error&) {
            ok = false;
        }
        try {
            gen::encode_state_tokens(pb, p, {std::vector<double>(10, 0.1)}, gen::StateKind::action);
            ok = false;
        } catch (const CapViolation&) {
        }
        std::vector<double> short_row{0.3, -0.2, 0.5};
        std::vector<double> padded = short_row;
        padded.resize(9, 0.0);
        const Tensor a = gen::encode_state_tokens(pb, p, {short_row}, gen::StateKind::proprio).value();
        const Tensor b = gen::encode_state_tokens(pb, p, {padded}, gen::StateKind::proprio).value();
        ok = ok && tensor::bit_identical(a, b);
        out.push_back({"state cap at nine", ok, ""});
    }

    {
        bank::MemoryBank b;
        for (int i = 0; i < 400; ++i) b.insert_with_embedding(stub_fragment(), random_unit(rng, enc::kEmbedDim));
        bank::RetrievalConfig cfg;
        cfg.dedup = false;
        cfg.k = 5;
        cfg.candidate_pool = 5;
        int mismatches = 0;
        for (int q = 0; q < 50; ++q) {
            const auto v = random_unit(rng, enc::kEmbedDim);
            std::vector<int> got;
            for (const auto& h : bank::select_diverse(b, v, cfg)) got.push_back(h.id);
            if (got != brute_force(b, v, 5)) ++mismatches;
        }
        out.push_back({"retrieval matches brute force", mismatches == 0, std::to_string(mismatches) + " mismatches"});
    }

    {
        bank::MemoryBank b;
        std::vector<std::vector<double>> centres;
        for (int c = 0; c < 8; ++c) centres.push_back(random_unit(rng, enc::kEmbedDim));
        for (int i = 0; i < 400; ++i) {
            auto v = centres[static_cast<std::size_t>(i % 8)];
            for (auto& x : v) x += 0.05 * rng.normal();
            double n = 0.0;
            for (double x : v) n += x * x;
            for (auto& x : v) x /= std::sqrt(n);
            b.insert_with_embedding(stub_fragment(), v);
        }
        bank::RetrievalConfig cfg;
        int violations = 0;
        for (int q = 0; q < 100; ++q) {
            auto v = centres[static_cast<std::size_t>(q % 8)];
            const auto hits = bank::select_diverse(b, v, cfg);
            for (std::size_t i = 0; i < hits.size(); ++i) {
                if (enc::dot(v, b.embedding(hits[i].id)) > cfg.dup_threshold) ++violations;
                for (std::size_t j = 0; j < i; ++j)
                    if (enc::dot(b.embedding(hits[i].id), b.embedding(hits[j].id)) > cfg.dup_threshold) ++violations;
            }
        }
        out.push_back({"dedup threshold holds", violations == 0, std::to_string(violations) + " violations"});
    }

    {
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            std::vector<std::vector<double>> comps;
            const int n = 1 + static_cast<int>(rng.index(4));
            for (int c = 0; c < n; ++c) {
                std::vector<double> v(enc::kEmbedDim);
                for (auto& x : v) x = rng.normal() * std::exp(rng.uniform(-3.0, 3.0));
                comps.push_back(v);
            }
            const auto e = enc::fuse(comps);
            worst = std::max(worst, std::abs(std::sqrt(enc::dot(e, e)) - 1.0));
        }
        out.push_back({"embeddings are unit norm", worst < 1e-9, "max deviation " + fmt(worst)});
    }

    {
        Rng drop(5);
        const auto mask = enc::dropout_mask(10000, 0.7, drop);
        const auto kept = std::count(mask.begin(), mask.end(), true);
        const double sigma = std::sqrt(10000 * 0.7 * 0.3);
        out.push_back({"query dropout rate", std::abs(static_cast<double>(kept) - 3000.0) <= 3 * sigma,
                       std::to_string(kept) + " of 10000 kept"});
    }
    return out;
}

bool print_selftest(const std::vector<CheckResult>& results, std::ostream& out) {
    bool all = true;
    for (const auto& r : results) {
        out << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) out << " (" << r.detail << ")";
        out << "\n";
        all = all && r.pass;
    }
    out << (all ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
    return all;
}

}  // namespace raea::cli
