// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace raea {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset);
std::string hex64(std::uint64_t v);

/// Keyed derivation: the child seed depends only on (root, name), so new
/// consumers never shift the streams of existing ones.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0);

/// mt19937_64 engine with hand-written distribution transforms so that draws
/// are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::size_t index(std::size_t n);
    bool bernoulli(double p) { return uniform() < p; }

    std::string state() const;
    void set_state(const std::string& s);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

/// Named streams derived from one global seed.
struct RngRoots {
    std::uint64_t seed = 0;
    std::uint64_t env = 0;
    std::uint64_t dropout = 0;
    std::uint64_t init = 0;
    std::uint64_t eval = 0;
    std::uint64_t train = 0;

    std::uint64_t stream(std::string_view name) const { return derive_seed(seed, name); }
};

RngRoots seed_everything(std::uint64_t seed);

}  // namespace raea
