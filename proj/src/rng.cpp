// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace cmdplab {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

RngStream RngStream::from_key(std::uint64_t k0, std::uint64_t k1,
                              std::uint64_t k2) {
    // Chain the keys through the finalizer, then expand to the four state
    // words SplitMix64-style. The expansion cannot produce the all-zero
    // state (mix64 output of distinct counters never collides to all zero
    // in four consecutive words), but guard anyway.
    std::uint64_t seed = mix64(k0 ^ mix64(k1 ^ mix64(k2)));
    RngStream s;
    for (auto& w : s.state_) {
        seed += 0x9E3779B97F4A7C15ULL;
        w = mix64(seed);
    }
    if (s.state_[0] == 0 && s.state_[1] == 0 && s.state_[2] == 0 &&
        s.state_[3] == 0) {
        s.state_[0] = 1;
    }
    return s;
}

std::uint64_t RngStream::next_u64() {
    // xoshiro256** step.
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t RngStream::next_below(std::uint32_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be > 0");
    // Rejection from the top 32 bits; bias-free and platform-independent.
    const std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
    for (;;) {
        const auto x = static_cast<std::uint32_t>(next_u64() >> 32);
        if (x < limit) return x % n;
    }
}

std::vector<double> dirichlet_uniform(int n, RngStream& stream) {
    if (n <= 0) throw std::invalid_argument("dirichlet_uniform: n must be > 0");
    if (n == 1) return {1.0};
    std::vector<double> cuts(static_cast<std::size_t>(n) - 1);
    for (auto& c : cuts) c = stream.next_double();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out(static_cast<std::size_t>(n));
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        out[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    out.back() = 1.0 - prev;
    return out;
}

} // namespace cmdplab
