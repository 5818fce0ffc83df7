// Unit tests for the keyed random stream and the simplex sampler.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cmdplab/rng.hpp"

using namespace cmdplab;

TEST_CASE("equal keys give identical streams, distinct keys differ") {
    RngStream a = RngStream::from_key(42, 7, 3);
    RngStream b = RngStream::from_key(42, 7, 3);
    CHECK(a == b);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c = RngStream::from_key(42, 7, 4);
    RngStream d = RngStream::from_key(42, 7, 3);
    int differences = 0;
    for (int i = 0; i < 100; ++i)
        if (c.next_u64() != d.next_u64()) ++differences;
    CHECK(differences > 90);
}

TEST_CASE("zero key and adjacent keys still produce spread-out output") {
    // SplitMix64 mixing must prevent low-entropy keys from correlating.
    RngStream z = RngStream::from_key(0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(z.next_u64());
    CHECK(seen.size() == 1000);

    RngStream a = RngStream::from_key(1);
    RngStream b = RngStream::from_key(2);
    int matches = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u64() == b.next_u64()) ++matches;
    CHECK(matches == 0);
}

TEST_CASE("next_double is in [0,1) and roughly uniform") {
    RngStream s = RngStream::from_key(123);
    const int n = 100000;
    double sum = 0.0;
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = s.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        sum += x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    // Mean of n uniforms concentrates at 0.5 with sd 1/sqrt(12 n) ~ 9e-4.
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("next_below is unbiased over a small range") {
    RngStream s = RngStream::from_key(9);
    const int n = 120000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i) {
        const std::uint32_t v = s.next_below(3);
        REQUIRE(v < 3);
        ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c - n / 3) < 1500);
}

TEST_CASE("mix64 is a bijective-looking finalizer on small inputs") {
    std::set<std::uint64_t> out;
    for (std::uint64_t x = 0; x < 4096; ++x) out.insert(mix64(x));
    CHECK(out.size() == 4096);
    CHECK(mix64(0) != 0);
}

TEST_CASE("dirichlet_uniform lands on the simplex and is deterministic") {
    RngStream s1 = RngStream::from_key(5, 6);
    RngStream s2 = RngStream::from_key(5, 6);
    for (int n : {1, 2, 3, 17}) {
        const std::vector<double> w1 = dirichlet_uniform(n, s1);
        const std::vector<double> w2 = dirichlet_uniform(n, s2);
        REQUIRE(static_cast<int>(w1.size()) == n);
        CHECK(w1 == w2); // bitwise determinism
        double sum = 0.0;
        for (double w : w1) {
            CHECK(w >= 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dirichlet_uniform consumes exactly n-1 draws") {
    RngStream a = RngStream::from_key(77);
    RngStream b = RngStream::from_key(77);
    (void)dirichlet_uniform(5, a);
    for (int i = 0; i < 4; ++i) (void)b.next_double();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("dirichlet_uniform has uniform marginal means") {
    RngStream s = RngStream::from_key(31);
    const int reps = 20000;
    std::vector<double> mean(4, 0.0);
    for (int r = 0; r < reps; ++r) {
        const std::vector<double> w = dirichlet_uniform(4, s);
        for (int i = 0; i < 4; ++i) mean[i] += w[i];
    }
    for (int i = 0; i < 4; ++i)
        CHECK(mean[i] / reps == doctest::Approx(0.25).epsilon(0.03));
}
