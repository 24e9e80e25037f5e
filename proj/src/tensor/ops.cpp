// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "raea/common/error.hpp"

namespace raea::tensor {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(const Tensor& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
Map view(Tensor& t) {
    return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

Tensor mat(std::size_t r, std::size_t c) { return Tensor::matrix(r, c); }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

// Adds `g` into the gradient of `v` when it participates in backward.
void accumulate(Tape& t, Var v, const Tensor& g) {
    if (t.requires_grad(v.id())) t.grad_buffer(v.id()).add_inplace(g);
}

}  // namespace

Var matmul(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw DimensionError("matmul: " + av.shape_str() + " x " + bv.shape_str());
    }
    Tensor y = mat(av.rows(), bv.cols());
    view(y).noalias() = view(av) * view(bv);
    return a.tape()->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(a.id())) view(t.grad_buffer(a.id())).noalias() += view(g) * view(b.value()).transpose();
        if (t.requires_grad(b.id())) view(t.grad_buffer(b.id())).noalias() += view(a.value()).transpose() * view(g);
    });
}

Var matmul_nt(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.cols()) {
        throw DimensionError("matmul_nt: " + av.shape_str() + " x " + bv.shape_str() + "^T");
    }
    Tensor y = mat(av.rows(), bv.rows());
    view(y).noalias() = view(av) * view(bv).transpose();
    return a.tape()->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(a.id())) view(t.grad_buffer(a.id())).noalias() += view(g) * view(b.value());
        if (t.requires_grad(b.id())) view(t.grad_buffer(b.id())).noalias() += view(g).transpose() * view(a.value());
    });
}

Var add(Var a, Var b) {
    require_same(a.value(), b.value(), "add");
    Tensor y = a.value();
    y.add_inplace(b.value());
    return a.tape()->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        accumulate(t, a, g);
        accumulate(t, b, g);
    });
}

Var sub(Var a, Var b) {
    require_same(a.value(), b.value(), "sub");
    Tensor y = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
    return a.tape()->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        accumulate(t, a, g);
        if (t.requires_grad(b.id())) {
            Tensor& gb = t.grad_buffer(b.id());
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b) {
    require_same(a.value(), b.value(), "mul");
    Tensor y = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
    return a.tape()->push(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(a.id())) {
            Tensor& ga = t.grad_buffer(a.id());
            const Tensor& bv = b.value();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(b.id())) {
            Tensor& gb = t.grad_buffer(b.id());
            const Tensor& av = a.value();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(Var a, double s) {
    Tensor y = a.value();
    y.scale_inplace(s);
    return a.tape()->push(std::move(y), {a}, [a, s](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& ga = t.grad_buffer(a.id());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
}

Var add_rowwise(Var x, Var b) {
    const Tensor& xv = x.value();
    const Tensor& bv = b.value();
    if (bv.size() != xv.cols()) {
        throw DimensionError("add_rowwise: bias " + bv.shape_str() + " vs " + xv.shape_str());
    }
    Tensor y = xv;
    const std::size_t n = xv.rows(), d = xv.cols();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y[r * d + c] += bv[c];
    return x.tape()->push(std::move(y), {x, b}, [x, b, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        accumulate(t, x, g);
        if (t.requires_grad(b.id())) {
            Tensor& gb = t.grad_buffer(b.id());
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
        }
    });
}

Var mul_rowwise(Var x, Var gvar) {
    const Tensor& xv = x.value();
    const Tensor& gv = gvar.value();
    if (gv.size() != xv.cols()) {
        throw DimensionError("mul_rowwise: scale " + gv.shape_str() + " vs " + xv.shape_str());
    }
    Tensor y = xv;
    const std::size_t n = xv.rows(), d = xv.cols();
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y[r * d + c] *= gv[c];
    return x.tape()->push(std::move(y), {x, gvar}, [x, gvar, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(x.id())) {
            Tensor& gx = t.grad_buffer(x.id());
            const Tensor& gv = gvar.value();
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[r * d + c] * gv[c];
        }
        if (t.requires_grad(gvar.id())) {
            Tensor& gg = t.grad_buffer(gvar.id());
            const Tensor& xv = x.value();
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * xv[r * d + c];
        }
    });
}

Var linear(Var x, Var W, Var b) {
    const Tensor& xv = x.value();
    const Tensor& wv = W.value();
    const Tensor& bv = b.value();
    if (xv.cols() != wv.rows() || bv.size() != wv.cols()) {
        throw DimensionError("linear: x " + xv.shape_str() + ", W " + wv.shape_str() + ", b " + bv.shape_str());
    }
    const std::size_t n = xv.rows(), dout = wv.cols();
    Tensor y = mat(n, dout);
    view(y).noalias() = view(xv) * view(wv);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dout; ++c) y[r * dout + c] += bv[c];
    return x.tape()->push(std::move(y), {x, W, b}, [x, W, b, n, dout](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        if (t.requires_grad(x.id())) view(t.grad_buffer(x.id())).noalias() += view(g) * view(W.value()).transpose();
        if (t.requires_grad(W.id())) view(t.grad_buffer(W.id())).noalias() += view(x.value()).transpose() * view(g);
        if (t.requires_grad(b.id())) {
            Tensor& gb = t.grad_buffer(b.id());
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < dout; ++c) gb[c] += g[r * dout + c];
        }
    });
}

Var tanh(Var x) {
    const Tensor& xv = x.value();
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = std::tanh(xv[i]);
    return x.tape()->push(std::move(y), {x}, [x](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - yv[i] * yv[i]);
    });
}

Var gelu(Var x) {
    static const double k = std::sqrt(2.0 / std::numbers::pi);
    const Tensor& xv = x.value();
    Tensor y(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double v = xv[i];
        y[i] = 0.5 * v * (1.0 + std::tanh(k * (v + 0.044715 * v * v * v)));
    }
    return x.tape()->push(std::move(y), {x}, [x](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& xv = x.value();
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            const double u = k * (v + 0.044715 * v * v * v);
            const double th = std::tanh(u);
            const double du = k * (1.0 + 3.0 * 0.044715 * v * v);
            gx[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
        }
    });
}

Var softmax_rows(Var x) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), m = xv.cols();
    Tensor y(xv.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const double* in = xv.data() + r * m;
        double* out = y.data() + r * m;
        double mx = in[0];
        for (std::size_t c = 1; c < m; ++c) mx = std::max(mx, in[c]);
        double s = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            out[c] = std::exp(in[c] - mx);
            s += out[c];
        }
        for (std::size_t c = 0; c < m; ++c) out[c] /= s;
    }
    return x.tape()->push(std::move(y), {x}, [x, n, m](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& yv = t.value(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t r = 0; r < n; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < m; ++c) dot += g[r * m + c] * yv[r * m + c];
            for (std::size_t c = 0; c < m; ++c) gx[r * m + c] += yv[r * m + c] * (g[r * m + c] - dot);
        }
    });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    if (d < 2) throw DimensionError("layer_norm needs at least 2 features");
    if (gamma.value().size() != d || beta.value().size() != d) {
        throw DimensionError("layer_norm: gamma/beta width must equal " + std::to_string(d));
    }
    Tensor xhat(xv.shape());
    std::vector<double> inv_sigma(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double* in = xv.data() + r * d;
        double mean = 0.0;
        for (std::size_t c = 0; c < d; ++c) mean += in[c];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
        var /= static_cast<double>(d);
        inv_sigma[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < d; ++c) xhat[r * d + c] = (in[c] - mean) * inv_sigma[r];
    }
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    Tensor y(xv.shape());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y[r * d + c] = gv[c] * xhat[r * d + c] + bv[c];
    return x.tape()->push(
        std::move(y), {x, gamma, beta},
        [x, gamma, beta, n, d, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](Tape& t, std::size_t self) {
            const Tensor& g = t.grad_buffer(self);
            if (t.requires_grad(gamma.id())) {
                Tensor& gg = t.grad_buffer(gamma.id());
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < d; ++c) gg[c] += g[r * d + c] * xhat[r * d + c];
            }
            if (t.requires_grad(beta.id())) {
                Tensor& gb = t.grad_buffer(beta.id());
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < d; ++c) gb[c] += g[r * d + c];
            }
            if (t.requires_grad(x.id())) {
                Tensor& gx = t.grad_buffer(x.id());
                const Tensor& gv = gamma.value();
                const double inv_d = 1.0 / static_cast<double>(d);
                for (std::size_t r = 0; r < n; ++r) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t c = 0; c < d; ++c) {
                        const double dxh = g[r * d + c] * gv[c];
                        m1 += dxh;
                        m2 += dxh * xhat[r * d + c];
                    }
                    m1 *= inv_d;
                    m2 *= inv_d;
                    for (std::size_t c = 0; c < d; ++c) {
                        const double dxh = g[r * d + c] * gv[c];
                        gx[r * d + c] += inv_sigma[r] * (dxh - m1 - xhat[r * d + c] * m2);
                    }
                }
            }
        });
}

Var depthwise_conv1d(Var x, Var kernels) {
    const Tensor& xv = x.value();
    const Tensor& kv = kernels.value();
    const std::size_t n = xv.rows(), d = xv.cols(), w = kv.cols();
    if (w % 2 == 0) throw ConfigError("depthwise_conv1d: kernel width must be odd, got " + std::to_string(w));
    if (kv.rows() != d) {
        throw DimensionError("depthwise_conv1d: kernels " + kv.shape_str() + " for " + std::to_string(d) +
                             " channels");
    }
    const auto half = static_cast<std::ptrdiff_t>(w / 2);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    Tensor y = mat(n, d);
    for (std::ptrdiff_t tk = 0; tk < sn; ++tk) {
        for (std::size_t j = 0; j < w; ++j) {
            const std::ptrdiff_t src = tk + static_cast<std::ptrdiff_t>(j) - half;
            if (src < 0 || src >= sn) continue;
            for (std::size_t c = 0; c < d; ++c) {
                y[static_cast<std::size_t>(tk) * d + c] += kv[c * w + j] * xv[static_cast<std::size_t>(src) * d + c];
            }
        }
    }
    return x.tape()->push(std::move(y), {x, kernels}, [x, kernels, n, d, w, half, sn](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        const Tensor& xv = x.value();
        const Tensor& kv = kernels.value();
        const bool gx_on = t.requires_grad(x.id());
        const bool gk_on = t.requires_grad(kernels.id());
        Tensor* gx = gx_on ? &t.grad_buffer(x.id()) : nullptr;
        Tensor* gk = gk_on ? &t.grad_buffer(kernels.id()) : nullptr;
        for (std::ptrdiff_t tk = 0; tk < sn; ++tk) {
            for (std::size_t j = 0; j < w; ++j) {
                const std::ptrdiff_t src = tk + static_cast<std::ptrdiff_t>(j) - half;
                if (src < 0 || src >= sn) continue;
                const auto so = static_cast<std::size_t>(src) * d;
                const auto to = static_cast<std::size_t>(tk) * d;
                for (std::size_t c = 0; c < d; ++c) {
                    if (gx) (*gx)[so + c] += kv[c * w + j] * g[to + c];
                    if (gk) (*gk)[c * w + j] += g[to + c] * xv[so + c];
                }
            }
        }
        (void)n;
    });
}

Var group_concat(Var x, std::size_t rate) {
    if (rate == 0) throw ConfigError("group_concat: rate must be >= 1");
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    const std::size_t groups = (n + rate - 1) / rate;
    Tensor y = mat(groups, rate * d);
    // Row-major layout makes the grouped matrix the input buffer plus a zero tail.
    std::copy(xv.data(), xv.data() + n * d, y.data());
    return x.tape()->push(std::move(y), {x}, [x, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < n * d; ++i) gx[i] += g[i];
    });
}

Var downsample_concat(Var x, std::size_t rate, Var W) {
    if (rate == 0) throw ConfigError("downsample_concat: rate must be >= 1");
    const std::size_t d = x.value().cols();
    if (W.value().rows() != rate * d) {
        throw DimensionError("downsample_concat: W " + W.value().shape_str() + " for rate " + std::to_string(rate) +
                             " and width " + std::to_string(d));
    }
    if (rate == 1) return matmul(x, W);
    return matmul(group_concat(x, rate), W);
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows of nothing");
    const std::size_t d = parts.front().value().cols();
    std::size_t n = 0;
    for (const Var& p : parts) {
        if (p.value().cols() != d) throw DimensionError("concat_rows: width mismatch");
        n += p.value().rows();
    }
    Tensor y = mat(n, d);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        std::copy(pv.data(), pv.data() + pv.size(), y.data() + off);
        off += pv.size();
    }
    return parts.front().tape()->push(std::move(y), parts, [parts](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t sz = p.value().size();
            if (t.requires_grad(p.id())) {
                Tensor& gp = t.grad_buffer(p.id());
                for (std::size_t i = 0; i < sz; ++i) gp[i] += g[off + i];
            }
            off += sz;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols of nothing");
    const std::size_t n = parts.front().value().rows();
    std::size_t d = 0;
    for (const Var& p : parts) {
        if (p.value().rows() != n) throw DimensionError("concat_cols: row count mismatch");
        d += p.value().cols();
    }
    Tensor y = mat(n, d);
    std::size_t off = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        const std::size_t pc = pv.cols();
        for (std::size_t r = 0; r < n; ++r)
            std::copy(pv.data() + r * pc, pv.data() + (r + 1) * pc, y.data() + r * d + off);
        off += pc;
    }
    return parts.front().tape()->push(std::move(y), parts, [parts, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        std::size_t off = 0;
        for (const Var& p : parts) {
            const std::size_t pc = p.value().cols();
            if (t.requires_grad(p.id())) {
                Tensor& gp = t.grad_buffer(p.id());
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += g[r * d + off + c];
            }
            off += pc;
        }
    });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
    const Tensor& xv = x.value();
    if (count == 0 || begin + count > xv.rows()) {
        throw DimensionError("slice_rows [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                             xv.shape_str());
    }
    const std::size_t d = xv.cols();
    Tensor y = mat(count, d);
    std::copy(xv.data() + begin * d, xv.data() + (begin + count) * d, y.data());
    return x.tape()->push(std::move(y), {x}, [x, begin, count, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < count * d; ++i) gx[begin * d + i] += g[i];
    });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
    const Tensor& xv = x.value();
    if (count == 0 || begin + count > xv.cols()) {
        throw DimensionError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) + ") of " +
                             xv.shape_str());
    }
    const std::size_t n = xv.rows(), d = xv.cols();
    Tensor y = mat(n, count);
    for (std::size_t r = 0; r < n; ++r)
        std::copy(xv.data() + r * d + begin, xv.data() + r * d + begin + count, y.data() + r * count);
    return x.tape()->push(std::move(y), {x}, [x, begin, count, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < count; ++c) gx[r * d + begin + c] += g[r * count + c];
    });
}

Var mean_rows(Var x) {
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    Tensor y = mat(1, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) y[c] += xv[r * d + c];
    const double inv = 1.0 / static_cast<double>(n);
    y.scale_inplace(inv);
    return x.tape()->push(std::move(y), {x}, [x, n, d, inv](Tape& t, std::size_t self) {
        const Tensor& g = t.grad_buffer(self);
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += g[c] * inv;
    });
}

Var sum(Var x) {
    const Tensor& xv = x.value();
    double s = 0.0;
    for (double v : xv.values()) s += v;
    return x.tape()->push(Tensor({1, 1}, s), {x}, [x](Tape& t, std::size_t self) {
        const double g = t.grad_buffer(self)[0];
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
}

Var weighted_sum(Var x, const Tensor& w) {
    const Tensor& xv = x.value();
    if (w.size() != xv.size()) throw DimensionError("weighted_sum: weight size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += w[i] * xv[i];
    return x.tape()->push(Tensor({1, 1}, s), {x}, [x, w](Tape& t, std::size_t self) {
        const double g = t.grad_buffer(self)[0];
        Tensor& gx = t.grad_buffer(x.id());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
    });
}

Var masked_mse(Var pred, const Tensor& target, const std::vector<bool>& mask) {
    const Tensor& pv = pred.value();
    if (pv.size() != target.size() || mask.size() != pv.size()) {
        throw DimensionError("masked_mse: pred " + pv.shape_str() + ", target " + target.shape_str() + ", mask " +
                             std::to_string(mask.size()));
    }
    std::size_t count = 0;
    double s = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        if (!mask[i]) continue;
        const double e = pv[i] - target[i];
        s += e * e;
        ++count;
    }
    if (count == 0) throw DimensionError("masked_mse: empty mask");
    const double inv = 1.0 / static_cast<double>(count);
    return pred.tape()->push(Tensor({1, 1}, s * inv), {pred}, [pred, target, mask, inv](Tape& t, std::size_t self) {
        const double g = t.grad_buffer(self)[0];
        Tensor& gp = t.grad_buffer(pred.id());
        const Tensor& pv = pred.value();
        for (std::size_t i = 0; i < gp.size(); ++i) {
            if (mask[i]) gp[i] += g * 2.0 * (pv[i] - target[i]) * inv;
        }
    });
}

}  // namespace raea::tensor
