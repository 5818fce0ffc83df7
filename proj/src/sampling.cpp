// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/sampling.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "cmdplab/rng.hpp"

namespace cmdplab {

int worker_count() {
    if (const char* env = std::getenv("CMDP_LAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(std::min(v, 256L));
        return 1;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

namespace {

void build_count_tables(Buffer& buf, int num_states) {
    const int cells = buf.num_pairs() * buf.T;
    buf.cell_offsets.assign(static_cast<std::size_t>(cells) + 1, 0);
    buf.count_states.clear();
    buf.count_values.clear();

    std::vector<std::int32_t> histogram(
        static_cast<std::size_t>(num_states), 0);
    for (int cell = 0; cell < cells; ++cell) {
        const std::int32_t* first =
            buf.samples.data() + static_cast<std::size_t>(cell) * buf.M;
        for (int m = 0; m < buf.M; ++m)
            ++histogram[static_cast<std::size_t>(first[m])];
        for (int s = 0; s < num_states; ++s) {
            if (histogram[static_cast<std::size_t>(s)] > 0) {
                buf.count_states.push_back(s);
                buf.count_values.push_back(
                    histogram[static_cast<std::size_t>(s)]);
                histogram[static_cast<std::size_t>(s)] = 0;
            }
        }
        buf.cell_offsets[static_cast<std::size_t>(cell) + 1] =
            static_cast<std::int64_t>(buf.count_states.size());
    }
}

} // namespace

Buffer data_collection(const GenerativeModel& gen,
                       const std::vector<std::pair<int, int>>& coreset,
                       int T, int M, std::uint64_t master_seed) {
    if (T < 1 || M < 1)
        throw ParameterError("data collection requires T >= 1 and M >= 1");
    if (coreset.empty())
        throw ParameterError("data collection requires a nonempty coreset");
    const long long total =
        static_cast<long long>(T) * M * static_cast<long long>(
            coreset.size());
    if (total > kMaxBufferSamples)
        throw ParameterError(
            "requested buffer of " + std::to_string(total) +
            " samples exceeds the in-memory cap of " +
            std::to_string(kMaxBufferSamples) +
            "; shrink T, M, or the coreset");
    for (const auto& [s, a] : coreset)
        if (s < 0 || s >= gen.num_states() || a < 0 ||
            a >= gen.num_actions())
            throw ParameterError("coreset pair (" + std::to_string(s) +
                                 ", " + std::to_string(a) +
                                 ") is out of range");

    Buffer buf;
    buf.coreset = coreset;
    buf.T = T;
    buf.M = M;
    buf.master_seed = master_seed;
    buf.samples.resize(static_cast<std::size_t>(total));

    const int cells = buf.num_pairs() * T;
    const int A = gen.num_actions();
    auto fill_range = [&](int lo, int hi) {
        for (int cell = lo; cell < hi; ++cell) {
            const int ci = cell / T;
            const int t = cell % T;
            const auto [s, a] = buf.coreset[static_cast<std::size_t>(ci)];
            const std::uint64_t pair_id =
                static_cast<std::uint64_t>(s) * static_cast<std::uint64_t>(
                    A) + static_cast<std::uint64_t>(a);
            RngStream stream = RngStream::from_key(
                master_seed, pair_id, static_cast<std::uint64_t>(t));
            std::int32_t* out =
                buf.samples.data() + static_cast<std::size_t>(cell) * M;
            for (int m = 0; m < M; ++m)
                out[m] = static_cast<std::int32_t>(gen.sample(s, a, stream));
        }
    };

    const int workers = std::min(worker_count(), cells);
    if (workers <= 1) {
        fill_range(0, cells);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const int chunk = (cells + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(cells, lo + chunk);
            if (lo < hi) pool.emplace_back(fill_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    build_count_tables(buf, gen.num_states());
    return buf;
}

std::string buffer_to_json_string(const Buffer& b) {
    nlohmann::json j;
    j["T"] = b.T;
    j["M"] = b.M;
    j["master_seed"] = b.master_seed;
    nlohmann::json coreset = nlohmann::json::array();
    for (const auto& sa : b.coreset)
        coreset.push_back({sa.first, sa.second});
    j["coreset"] = std::move(coreset);
    j["samples"] = b.samples;
    return j.dump() + "\n";
}

Buffer buffer_from_json(const std::string& text, int num_states) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Buffer b;
    b.T = j.at("T").get<int>();
    b.M = j.at("M").get<int>();
    b.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& sa : j.at("coreset"))
        b.coreset.emplace_back(sa.at(0).get<int>(), sa.at(1).get<int>());
    b.samples = j.at("samples").get<std::vector<std::int32_t>>();
    if (b.samples.size() != static_cast<std::size_t>(b.total_samples()))
        throw ValidationError("buffer JSON: sample array has wrong length");
    for (const std::int32_t s : b.samples)
        if (s < 0 || s >= num_states)
            throw ValidationError("buffer JSON: sample state out of range");
    build_count_tables(b, num_states);
    return b;
}

} // namespace cmdplab
