// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>

#include "doctest.h"
#include "raea/common/error.hpp"
#include "raea/common/rng.hpp"
#include "raea/tensor/adam.hpp"
#include "raea/tensor/grad_check.hpp"
#include "raea/tensor/ops.hpp"

using namespace raea;
using namespace raea::tensor;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = scale * rng.normal();
    return t;
}

// Central differences over a plain function of a flat vector; shares no code with the tape.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                double eps = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + eps;
        const double fp = f(x);
        x[i] = orig - eps;
        const double fm = f(x);
        x[i] = orig;
        g[i] = (fp - fm) / (2 * eps);
    }
    return g;
}

// Checks one op through grad_check with a random linear probe so that the
// scalar depends on every output entry with a different weight.
double probe_error(Rng& rng, std::vector<Tensor> inputs, const std::function<Var(Tape&, std::span<const Var>)>& op) {
    Tensor probe;
    ScalarFn f = [&](Tape& tape, std::span<const Var> v) {
        Var y = op(tape, v);
        if (probe.empty()) probe = random_tensor(rng, y.value().shape());
        return weighted_sum(y, probe);
    };
    {
        Tape warm(false);
        std::vector<Var> leaves;
        for (auto& t : inputs) leaves.push_back(warm.leaf_ref(t, false));
        f(warm, leaves);
    }
    auto report = grad_check(f, inputs);
    REQUIRE(report.finite);
    return report.max_rel_error;
}

}  // namespace

TEST_CASE("linear examples") {
    Tape tape;
    Var x = tape.leaf(Tensor::from_rows({{1, 0}}));
    Var W = tape.leaf(Tensor::from_rows({{2, 3}, {4, 5}}));
    Var b = tape.leaf(Tensor::row({0, 0}));
    CHECK(linear(x, W, b).value() == Tensor::from_rows({{2, 3}}));

    Var z = tape.leaf(Tensor::from_rows({{0, 0}}));
    Var b7 = tape.leaf(Tensor::row({7, 7}));
    CHECK(linear(z, W, b7).value() == Tensor::from_rows({{7, 7}}));

    Var bad = tape.leaf(Tensor::from_rows({{1, 2, 3}}));
    CHECK_THROWS_AS(linear(bad, W, b), DimensionError);
    CHECK_THROWS_AS(linear(x, W, tape.leaf(Tensor::row({1, 2, 3}))), DimensionError);
}

TEST_CASE("linear weight gradient matches central differences") {
    const std::vector<double> xs{1, 2};
    Tape tape;
    Var x = tape.leaf(Tensor::from_rows({{1, 2}}), false);
    Var W = tape.leaf(Tensor::from_rows({{0.3, -0.1}, {0.7, 0.2}}));
    Var b = tape.leaf(Tensor::row({0, 0}), false);
    Var out = sum(linear(x, W, b));
    tape.backward(out);
    const Tensor& g = tape.grad(W);

    auto f = [&](const std::vector<double>& w) {
        double s = 0;
        for (int c = 0; c < 2; ++c)
            for (int r = 0; r < 2; ++r) s += xs[r] * w[r * 2 + c];
        return s;
    };
    auto fd = fd_gradient(f, {0.3, -0.1, 0.7, 0.2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(g[i] == doctest::Approx(fd[i]).epsilon(1e-9));
    CHECK(g == Tensor::from_rows({{1, 1}, {2, 2}}));
}

TEST_CASE("softmax rows") {
    Tape tape;
    CHECK(softmax_rows(tape.leaf(Tensor::from_rows({{0, 0}}))).value() == Tensor::from_rows({{0.5, 0.5}}));
    Tensor y = softmax_rows(tape.leaf(Tensor::from_rows({{std::log(2.0), 0}}))).value();
    CHECK(y[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor x = random_tensor(rng, {3, 4}, 10.0);
        Tensor s = softmax_rows(tape.leaf(x)).value();
        for (std::size_t r = 0; r < 3; ++r) {
            double total = 0;
            for (double v : s.row_span(r)) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                total += v;
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }
    Tensor huge = Tensor::from_rows({{1000, 999, -1000}});
    CHECK(softmax_rows(tape.leaf(huge)).value().all_finite());
}

TEST_CASE("layer norm") {
    Tape tape;
    Var g = tape.leaf(Tensor::row({1, 1}));
    Var b = tape.leaf(Tensor::row({0, 0}));
    Tensor y = layer_norm(tape.leaf(Tensor::from_rows({{1, -1}})), g, b).value();
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(y[1] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(layer_norm(tape.leaf(Tensor::from_rows({{5, 5}})), g, b).value() == Tensor::from_rows({{0, 0}}));
    CHECK_THROWS_AS(layer_norm(tape.leaf(Tensor::from_rows({{5}})), tape.leaf(Tensor::row({1})),
                               tape.leaf(Tensor::row({0}))),
                    DimensionError);

    Rng rng(11);
    double err = probe_error(rng, {random_tensor(rng, {2, 4}), random_tensor(rng, {4}), random_tensor(rng, {4})},
                             [](Tape&, std::span<const Var> v) { return layer_norm(v[0], v[1], v[2]); });
    CHECK(err < 1e-6);
}

TEST_CASE("depthwise conv") {
    Tape tape;
    Rng rng(5);
    Tensor x = random_tensor(rng, {5, 3});
    Tensor ident = Tensor::from_rows({{0, 1, 0}, {0, 1, 0}, {0, 1, 0}});
    CHECK(depthwise_conv1d(tape.leaf(x), tape.leaf(ident)).value() == x);

    Tensor impulse({5, 1}, 0.0);
    impulse(2, 0) = 1.0;
    Tensor smear = depthwise_conv1d(tape.leaf(impulse), tape.leaf(Tensor::from_rows({{1, 1, 1}}))).value();
    CHECK(smear == Tensor({5, 1}, std::vector<double>{0, 1, 1, 1, 0}));

    CHECK_THROWS_AS(depthwise_conv1d(tape.leaf(x), tape.leaf(Tensor({3, 2}, 1.0))), ConfigError);

    double err = probe_error(rng, {random_tensor(rng, {5, 3}), random_tensor(rng, {3, 3})},
                             [](Tape&, std::span<const Var> v) { return depthwise_conv1d(v[0], v[1]); });
    CHECK(err < 1e-6);
}

TEST_CASE("downsample concat") {
    Tape tape;
    Rng rng(9);
    Tensor x = random_tensor(rng, {4, 3});
    Tensor eye({3, 3}, 0.0);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    CHECK(bit_identical(downsample_concat(tape.leaf(x), 1, tape.leaf(eye)).value(), x));

    Tensor W2 = random_tensor(rng, {6, 3});
    CHECK(downsample_concat(tape.leaf(x), 2, tape.leaf(W2)).value().rows() == 2);

    Tensor x3 = random_tensor(rng, {3, 3});
    Tensor grouped = group_concat(tape.leaf(x3), 2).value();
    CHECK(grouped.rows() == 2);
    CHECK(grouped.cols() == 6);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(grouped(1, c) == x3(2, c));
        CHECK(grouped(1, 3 + c) == 0.0);
        CHECK(grouped(0, 3 + c) == x3(1, c));
    }
    CHECK(downsample_concat(tape.leaf(x3), 2, tape.leaf(W2)).value().rows() == 2);
    CHECK_THROWS_AS(downsample_concat(tape.leaf(x), 0, tape.leaf(eye)), ConfigError);

    double err = probe_error(rng, {random_tensor(rng, {5, 3}), random_tensor(rng, {6, 3})},
                             [](Tape&, std::span<const Var> v) { return downsample_concat(v[0], 2, v[1]); });
    CHECK(err < 1e-6);
}

TEST_CASE("adam") {
    std::vector<Tensor> p{Tensor::row({1.0})};
    AdamState st = AdamState::zeros_like(p);
    AdamConfig cfg;
    cfg.lr = 0.1;
    cfg.eps = 1e-14;
    adam_step(p, {Tensor::row({1.0})}, st, cfg);
    CHECK(p[0][0] - 1.0 == doctest::Approx(-0.1).epsilon(1e-9));
    CHECK(st.step == 1);

    std::vector<Tensor> q{Tensor::row({0.5, -2.0})};
    AdamState sq = AdamState::zeros_like(q);
    adam_step(q, {Tensor::row({0.0, 0.0})}, sq, AdamConfig{});
    CHECK(q[0] == Tensor::row({0.5, -2.0}));

    std::vector<Tensor> x{Tensor::row({3.0})};
    AdamState sx = AdamState::zeros_like(x);
    AdamConfig c2;
    c2.lr = 0.1;
    for (int i = 0; i < 500; ++i) adam_step(x, {Tensor::row({2.0 * x[0][0]})}, sx, c2);
    CHECK(std::abs(x[0][0]) < 0.01);

    c2.lr = 0.0;
    const Tensor before = x[0];
    adam_step(x, {Tensor::row({1.0})}, sx, c2);
    CHECK(x[0] == before);
    c2.lr = -0.1;
    CHECK_THROWS_AS(adam_step(x, {Tensor::row({1.0})}, sx, c2), ConfigError);

    std::vector<Tensor> w{Tensor::row({2.0})};
    AdamState sw = AdamState::zeros_like(w);
    AdamConfig c3;
    c3.lr = 0.1;
    c3.weight_decay = 0.5;
    adam_step(w, {Tensor::row({0.0})}, sw, c3);
    CHECK(w[0][0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("grad check reports") {
    std::vector<Tensor> p{Tensor::row({3.0})};
    auto sq = [](Tape&, std::span<const Var> v) { return sum(mul(v[0], v[0])); };
    auto r = grad_check(sq, p);
    CHECK(r.finite);
    CHECK(r.max_abs_error < 1e-8);
    {
        Tape t;
        Var x = t.leaf(p[0]);
        t.backward(sq(t, std::vector<Var>{x}));
        CHECK(t.grad(x)[0] == doctest::Approx(6.0));
    }

    Rng rng(2);
    std::vector<Tensor> s{random_tensor(rng, {3, 4})};
    auto softsum = [](Tape&, std::span<const Var> v) { return sum(softmax_rows(v[0])); };
    CHECK(grad_check(softsum, s).max_rel_error < 1e-6);

    std::vector<Tensor> bad{Tensor::row({1.0})};
    auto blowup = [](Tape&, std::span<const Var> v) { return scale(sum(v[0]), std::numeric_limits<double>::infinity()); };
    CHECK_FALSE(grad_check(blowup, bad).finite);
}

TEST_CASE("every primitive matches finite differences on random shapes") {
    Rng rng(77);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        const std::size_t d = 2 + rng.index(15);
        const std::size_t k = 1 + rng.index(16);
        auto T = [&](Shape s) { return random_tensor(rng, std::move(s)); };
        using V = std::span<const Var>;
        CAPTURE(n);
        CAPTURE(d);
        CHECK(probe_error(rng, {T({n, d}), T({d, k})}, [](Tape&, V v) { return matmul(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({k, d})}, [](Tape&, V v) { return matmul_nt(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({d, k}), T({k})},
                          [](Tape&, V v) { return linear(v[0], v[1], v[2]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({n, d})}, [](Tape&, V v) { return add(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({n, d})}, [](Tape&, V v) { return sub(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({n, d})}, [](Tape&, V v) { return mul(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({d})}, [](Tape&, V v) { return add_rowwise(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({d})}, [](Tape&, V v) { return mul_rowwise(v[0], v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [](Tape&, V v) { return scale(v[0], 0.37); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [](Tape&, V v) { return tanh(v[0]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [](Tape&, V v) { return gelu(v[0]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [](Tape&, V v) { return softmax_rows(v[0]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({d}), T({d})},
                          [](Tape&, V v) { return layer_norm(v[0], v[1], v[2]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({d, 3})}, [](Tape&, V v) { return depthwise_conv1d(v[0], v[1]); }) <
              1e-6);
        const std::size_t rate = 1 + rng.index(3);
        CHECK(probe_error(rng, {T({n, d}), T({rate * d, k})},
                          [rate](Tape&, V v) { return downsample_concat(v[0], rate, v[1]); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({k, d})}, [](Tape&, V v) { return concat_rows({v[0], v[1]}); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d}), T({n, k})}, [](Tape&, V v) { return concat_cols({v[0], v[1]}); }) < 1e-6);
        CHECK(probe_error(rng, {T({n + 1, d})}, [n](Tape&, V v) { return slice_rows(v[0], 1, n); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [d](Tape&, V v) { return slice_cols(v[0], 1, d - 1); }) < 1e-6);
        CHECK(probe_error(rng, {T({n, d})}, [](Tape&, V v) { return mean_rows(v[0]); }) < 1e-6);
        Tensor target = T({1, d});
        std::vector<bool> mask(d, true);
        mask[0] = false;
        CHECK(probe_error(rng, {T({1, d})},
                          [&](Tape&, V v) { return masked_mse(v[0], target, mask); }) < 1e-6);
    }
}

TEST_CASE("tape visits ops in reverse and accumulates at fan-out") {
    Tape tape;
    Var x = tape.leaf(Tensor::row({2.0}));
    Var a = scale(x, 3.0);
    Var b = mul(x, x);
    Var out = sum(add(a, b));
    tape.backward(out);
    CHECK(tape.grad(x)[0] == doctest::Approx(3.0 + 2 * 2.0));
    const auto& order = tape.last_backward_order();
    REQUIRE(!order.empty());
    for (std::size_t i = 1; i < order.size(); ++i) CHECK(order[i] < order[i - 1]);
    CHECK(order.front() == out.id());
}

TEST_CASE("ops are bit-deterministic") {
    Rng rng(4);
    Tensor x = random_tensor(rng, {6, 8});
    Tensor W = random_tensor(rng, {8, 8});
    Tensor g = random_tensor(rng, {8});
    Tensor b = random_tensor(rng, {8});
    auto run = [&] {
        Tape t;
        Var h = gelu(layer_norm(matmul(t.leaf(x), t.leaf(W)), t.leaf(g), t.leaf(b)));
        return softmax_rows(matmul_nt(h, h)).value();
    };
    CHECK(bit_identical(run(), run()));
}

TEST_CASE("tensor construction rules") {
    CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.reshaped({3, 2}).rows() == 3);
    CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);
}
