// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "raea/common/rng.hpp"
#include "raea/envsim/render.hpp"

namespace raea::enc {

using env::Modality;
using env::Payload;

inline constexpr std::size_t kEmbedDim = 64;

/// Unit-norm fused embedding (length d_e).
using EmbeddingVec = std::vector<double>;

/// Length of featurize() output for a modality.
std::size_t feature_dim(Modality m);

/// Frozen random projections, one per modality, shared by query and memory
/// encoders. Each matrix is feature_dim x d_e with N(0, s_m^2) entries where
/// s_m scales a typical payload of that modality to norm gain(m).
class EncoderParams {
public:
    explicit EncoderParams(std::uint64_t seed = 0, std::size_t d_e = kEmbedDim);

    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t d_e() const noexcept { return d_e_; }
    /// Row-major feature_dim(m) x d_e.
    const std::vector<double>& projection(Modality m) const { return proj_[static_cast<std::size_t>(m)]; }

    static double gain(Modality m);

private:
    std::uint64_t seed_;
    std::size_t d_e_;
    std::array<std::vector<double>, 6> proj_;
};

/// Canonical feature vector: bag-of-token counts (text), mean token signature
/// (audio), raster (image), mean frame (video), zero-padded point list
/// (point cloud), identity (state).
std::vector<double> featurize(const Payload& p);

std::vector<double> project(Modality m, std::span<const double> features, const EncoderParams& params);
std::vector<double> encode_modality(const Payload& p, const EncoderParams& params);

/// Mean of the components, L2-normalised. Throws DegenerateEmbedding on a zero mean.
EmbeddingVec fuse(const std::vector<std::vector<double>>& components);

double dot(std::span<const double> a, std::span<const double> b);

struct Query {
    std::vector<Payload> instruction;
    std::vector<Payload> observation;
};

enum class Mode { train, eval };

/// keep[i] is false with probability `rate`; if every element would be
/// dropped, one uniformly chosen element is kept.
std::vector<bool> dropout_mask(std::size_t n, double rate, Rng& rng);

/// Drops raw elements of a payload: tokens (text, audio), cells (image and
/// each video frame), points (point cloud, zeroed in place). State vectors
/// have no token structure and are returned unchanged.
Payload drop_elements(const Payload& p, double rate, Rng& rng);

/// Encodes the payloads in order (instruction first, then observation) and fuses.
EmbeddingVec encode_payloads(std::span<const Payload> payloads, const EncoderParams& params);

EmbeddingVec encode_query(const Query& q, const EncoderParams& params, Mode mode, double dropout_rate, Rng& rng);

}  // namespace raea::enc
