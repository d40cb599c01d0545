#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hybridkinetics/rng.hpp"

using namespace hybridkinetics;

namespace {

// Reference SplitMix64 (Vigna), written out independently of the library.
std::uint64_t splitmix_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

TEST(Rng, StreamMatchesReferenceSplitMix) {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
        std::uint64_t state = seed;
        RngStream rng(seed);
        for (int i = 0; i < 1000; ++i) ASSERT_EQ(rng.next_u64(), splitmix_next(state));
    }
}

TEST(Rng, KnownFirstOutputForSeedZero) {
    RngStream rng(0);
    EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, DerivedSeedsFollowDocumentedRule) {
    const std::uint64_t master = 12345;
    for (std::uint64_t i = 0; i < 10; ++i) {
        std::uint64_t z = master ^ ((i + 1) * 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        EXPECT_EQ(derive_stream_seed(master, i), z);
    }
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_stream_seed(7, i));
    EXPECT_EQ(seen.size(), 10000u);
}

TEST(Rng, UniformOpen0NeverZero) {
    RngStream rng(3);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform_open0();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_LT(lo, 1e-4);
    EXPECT_GT(hi, 1 - 1e-4);
}

TEST(Rng, ExponentialMeanIsOne) {
    RngStream rng(11);
    const int n = 1'000'000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.exponential();
    EXPECT_NEAR(sum / n, 1.0, 5.0 / std::sqrt(n));
}

TEST(Rng, CounterTracksDraws) {
    RngStream a(9), b(9);
    for (int i = 0; i < 5; ++i) a.next_u64();
    EXPECT_EQ(a.counter(), 5u);
    for (int i = 0; i < 5; ++i) b.uniform();
    EXPECT_EQ(a.next_u64(), b.next_u64());
}
