// SPDX-License-Identifier: Apache-2.0
#include "raea/common/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "raea/common/error.hpp"

namespace raea {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
    return splitmix64(splitmix64(root) ^ fnv1a64(name));
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(root) ^ a) ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

double Rng::normal() {
    // Box-Muller, second variate discarded so the engine state is the only state.
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ConfigError("Rng::index on empty range");
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

std::string Rng::state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::set_state(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (is.fail()) throw ConfigError("malformed rng state");
}

RngRoots seed_everything(std::uint64_t seed) {
    RngRoots r;
    r.seed = seed;
    r.env = r.stream("env");
    r.dropout = r.stream("dropout");
    r.init = r.stream("init");
    r.eval = r.stream("eval");
    r.train = r.stream("train");
    return r;
}

}  // namespace raea
