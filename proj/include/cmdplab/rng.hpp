// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cmdplab {

/// Counter-keyed pseudo-random stream (xoshiro256** seeded through a
/// SplitMix64 key mix). Every stochastic entry point in the toolkit derives
/// one stream per logical cell from small integer keys, so output is
/// reproducible bit-for-bit from the keys alone, on any platform, and does
/// not depend on how work is split across threads.
class RngStream {
  public:
    /// Derive an independent stream from up to three integer keys.
    /// Equal keys give equal streams; distinct keys give streams that are
    /// statistically independent for simulation purposes.
    static RngStream from_key(std::uint64_t k0, std::uint64_t k1 = 0,
                              std::uint64_t k2 = 0);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random mantissa bits; consumes
    /// exactly one 64-bit draw.
    double next_double();

    /// Uniform integer in [0, n); unbiased (rejection); n must be > 0.
    std::uint32_t next_below(std::uint32_t n);

    bool operator==(const RngStream&) const = default;

  private:
    std::array<std::uint64_t, 4> state_{};
};

/// SplitMix64 finalizer; the key-mixing primitive behind stream derivation.
std::uint64_t mix64(std::uint64_t x);

/// Dirichlet(1,...,1) draw (uniform on the n-simplex) via sorted-uniform
/// spacings. Uses only comparisons and subtractions, so results are
/// bit-identical across platforms; consumes exactly n-1 draws.
std::vector<double> dirichlet_uniform(int n, RngStream& stream);

} // namespace cmdplab
