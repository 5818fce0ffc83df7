// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cmdplab/cmdp.hpp"

namespace cmdplab {

/// A buffer of next-state samples: for every coreset pair, T disjoint
/// batches of M samples each.  Alongside the raw samples, the buffer
/// holds per-(pair, batch) next-state count tables so consumers can
/// form batch means in O(distinct states) instead of O(M); the count
/// tables list states in ascending order, which fixes the floating-
/// point summation order for every consumer.
struct Buffer {
    std::vector<std::pair<int, int>> coreset;
    int T = 0;
    int M = 0;
    std::uint64_t master_seed = 0;

    /// Samples laid out pair-major: index (ci, t, m) lives at
    /// (ci*T + t)*M + m.
    std::vector<std::int32_t> samples;

    /// CSR count tables over cells cell = ci*T + t.
    std::vector<std::int64_t> cell_offsets; ///< size |C|*T + 1
    std::vector<std::int32_t> count_states; ///< ascending within a cell
    std::vector<std::int32_t> count_values;

    int num_pairs() const { return static_cast<int>(coreset.size()); }
    long long total_samples() const {
        return static_cast<long long>(T) * M * num_pairs();
    }
    int cell(int ci, int t) const { return ci * T + t; }
    const std::int32_t* batch(int ci, int t) const {
        return samples.data() +
               (static_cast<std::size_t>(ci) * T + t) * M;
    }
};

/// Desk-scale cap on buffer size; collection requests above it are
/// rejected with ParameterError.
inline constexpr long long kMaxBufferSamples = 10'000'000;

/// Worker count for parallel sections: the CMDP_LAB_THREADS environment
/// variable when set (clamped to >= 1), otherwise the hardware
/// concurrency capped at 8.
int worker_count();

/// Populate a buffer by querying the generative model: each
/// (pair, batch) cell draws its M samples from an rng stream derived
/// from (master_seed, global pair id, batch index), so contents are
/// identical regardless of how cells are scheduled across threads.
Buffer data_collection(const GenerativeModel& gen,
                       const std::vector<std::pair<int, int>>& coreset,
                       int T, int M, std::uint64_t master_seed);

std::string buffer_to_json_string(const Buffer& b);
/// Rebuild a buffer (including count tables) from its JSON dump.
/// `num_states` bounds the stored next-state indices.
Buffer buffer_from_json(const std::string& text, int num_states);

} // namespace cmdplab
