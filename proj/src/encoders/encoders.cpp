// SPDX-License-Identifier: Apache-2.0
#include "raea/encoders/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "raea/common/error.hpp"
#include "raea/envsim/vocab.hpp"

namespace raea::enc {

namespace {

constexpr std::size_t kPointCloudDim = (env::kMaxObjects + 1) * 3;
constexpr double kDegenerateNorm = 1e-12;

// RMS featurize() norms measured over first frames of every task, colour,
// shape and template; they only set the projection scale.
double reference_norm(Modality m) {
    switch (m) {
        case Modality::text: return 2.84;
        case Modality::audio: return 1.23;
        case Modality::state_vec: return 2.49;
        case Modality::image_grid: return 4.87;
        case Modality::point_cloud: return 1.80;
        case Modality::video_clip: return 4.87;
    }
    return 1.0;
}

}  // namespace

std::size_t feature_dim(Modality m) {
    switch (m) {
        case Modality::text: return env::vocabulary().size();
        case Modality::audio: return env::kAudioSignatureDim;
        case Modality::state_vec: return env::kStateVecSize;
        case Modality::image_grid: return env::kImageSize;
        case Modality::point_cloud: return kPointCloudDim;
        case Modality::video_clip: return env::kImageSize;
    }
    return 0;
}

double EncoderParams::gain(Modality m) { return env::is_instruction_modality(m) ? 1.0 : 0.5; }

EncoderParams::EncoderParams(std::uint64_t seed, std::size_t d_e) : seed_(seed), d_e_(d_e) {
    if (d_e == 0) throw ConfigError("embedding width must be positive");
    for (Modality m : {Modality::text, Modality::audio, Modality::state_vec, Modality::image_grid,
                       Modality::point_cloud, Modality::video_clip}) {
        Rng rng(derive_seed(seed, env::to_string(m)));
        const std::size_t rows = feature_dim(m);
        const double s = gain(m) / (std::sqrt(static_cast<double>(d_e)) * reference_norm(m));
        auto& w = proj_[static_cast<std::size_t>(m)];
        w.resize(rows * d_e);
        for (auto& v : w) v = s * rng.normal();
    }
}

std::vector<double> featurize(const Payload& p) {
    const std::size_t dim = feature_dim(p.modality);
    std::vector<double> f(dim, 0.0);
    switch (p.modality) {
        case Modality::text:
            for (int t : p.tokens) {
                if (t < 0 || static_cast<std::size_t>(t) >= dim) throw DimensionError("token id out of vocabulary");
                f[static_cast<std::size_t>(t)] += 1.0;
            }
            break;
        case Modality::audio: {
            const std::size_t k = env::kAudioSignatureDim;
            if (p.values.size() % k) throw DimensionError("audio payload is not a whole number of signatures");
            const std::size_t n = p.values.size() / k;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < k; ++j) f[j] += p.values[i * k + j];
            if (n)
                for (auto& v : f) v /= static_cast<double>(n);
            break;
        }
        case Modality::state_vec:
        case Modality::image_grid:
            if (p.values.size() != dim) throw DimensionError(std::string(env::to_string(p.modality)) + " size mismatch");
            f = p.values;
            break;
        case Modality::point_cloud:
            if (p.values.size() % 3 || p.values.size() > dim) throw DimensionError("point cloud size mismatch");
            std::copy(p.values.begin(), p.values.end(), f.begin());
            break;
        case Modality::video_clip: {
            if (p.values.empty() || p.values.size() % dim) throw DimensionError("video clip size mismatch");
            const std::size_t frames = p.values.size() / dim;
            for (std::size_t fr = 0; fr < frames; ++fr)
                for (std::size_t i = 0; i < dim; ++i) f[i] += p.values[fr * dim + i];
            for (auto& v : f) v /= static_cast<double>(frames);
            break;
        }
        default: throw ConfigError("unsupported modality");
    }
    return f;
}

std::vector<double> project(Modality m, std::span<const double> features, const EncoderParams& params) {
    const std::size_t rows = feature_dim(m);
    if (features.size() != rows) throw DimensionError("feature length mismatch");
    const std::size_t d = params.d_e();
    const auto& w = params.projection(m);
    std::vector<double> out(d, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double x = features[r];
        if (x == 0.0) continue;
        const double* row = w.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) out[c] += x * row[c];
    }
    return out;
}

std::vector<double> encode_modality(const Payload& p, const EncoderParams& params) {
    return project(p.modality, featurize(p), params);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot of unequal lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

EmbeddingVec fuse(const std::vector<std::vector<double>>& components) {
    if (components.empty()) throw DegenerateEmbedding("nothing to fuse");
    const std::size_t d = components.front().size();
    // Summing in lexicographic order makes the result independent of the
    // order the components were passed in, down to the last bit.
    std::vector<const std::vector<double>*> order;
    for (const auto& c : components) {
        if (c.size() != d) throw DimensionError("fuse components of unequal length");
        order.push_back(&c);
    }
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return *a < *b; });
    EmbeddingVec mean(d, 0.0);
    for (const auto* c : order)
        for (std::size_t i = 0; i < d; ++i) mean[i] += (*c)[i];
    for (auto& v : mean) v /= static_cast<double>(components.size());
    const double norm = std::sqrt(dot(mean, mean));
    if (!(norm > kDegenerateNorm)) throw DegenerateEmbedding("fused embedding has zero norm");
    for (auto& v : mean) v /= norm;
    return mean;
}

std::vector<bool> dropout_mask(std::size_t n, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    std::vector<bool> keep(n, true);
    if (rate == 0.0 || n == 0) return keep;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        keep[i] = !rng.bernoulli(rate);
        any = any || keep[i];
    }
    if (!any) keep[rng.index(n)] = true;
    return keep;
}

Payload drop_elements(const Payload& p, double rate, Rng& rng) {
    Payload out = p;
    switch (p.modality) {
        case Modality::text:
        case Modality::audio: {
            auto keep = dropout_mask(p.tokens.size(), rate, rng);
            const std::size_t k = env::kAudioSignatureDim;
            out.tokens.clear();
            out.values.clear();
            for (std::size_t i = 0; i < keep.size(); ++i) {
                if (!keep[i]) continue;
                out.tokens.push_back(p.tokens[i]);
                if (p.modality == Modality::audio)
                    out.values.insert(out.values.end(), p.values.begin() + static_cast<std::ptrdiff_t>(i * k),
                                      p.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
            }
            break;
        }
        case Modality::image_grid:
        case Modality::video_clip: {
            const std::size_t cells = p.values.size() / 3;
            auto keep = dropout_mask(cells, rate, rng);
            for (std::size_t c = 0; c < cells; ++c)
                if (!keep[c])
                    for (std::size_t ch = 0; ch < 3; ++ch) out.values[c * 3 + ch] = 0.0;
            break;
        }
        case Modality::point_cloud: {
            const std::size_t points = p.values.size() / 3;
            auto keep = dropout_mask(points, rate, rng);
            for (std::size_t i = 0; i < points; ++i)
                if (!keep[i])
                    for (std::size_t j = 0; j < 3; ++j) out.values[i * 3 + j] = 0.0;
            break;
        }
        case Modality::state_vec: break;
    }
    return out;
}

EmbeddingVec encode_payloads(std::span<const Payload> payloads, const EncoderParams& params) {
    std::vector<std::vector<double>> comps;
    comps.reserve(payloads.size());
    for (const auto& p : payloads) comps.push_back(encode_modality(p, params));
    return fuse(comps);
}

EmbeddingVec encode_query(const Query& q, const EncoderParams& params, Mode mode, double dropout_rate, Rng& rng) {
    if (q.observation.empty()) throw ConfigError("query needs at least one observation payload");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    std::vector<Payload> all;
    all.reserve(q.instruction.size() + q.observation.size());
    const bool drop = mode == Mode::train && dropout_rate > 0.0;
    for (const auto* group : {&q.instruction, &q.observation})
        for (const auto& p : *group) all.push_back(drop ? drop_elements(p, dropout_rate, rng) : p);
    return encode_payloads(all, params);
}

}  // namespace raea::enc
