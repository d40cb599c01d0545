#pragma once

#include <cmath>
#include <cstdint>

namespace hybridkinetics {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of the i-th member of an ensemble. Depends only on (master, index), so
/// ensemble output never depends on how trajectories are scheduled.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return mix64(master_seed ^ ((index + 1) * kGoldenGamma));
}

/// Counter-based stream: the n-th draw is mix64(seed + n * gamma), n = 1, 2, ...
class RngStream {
public:
    explicit constexpr RngStream(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    constexpr std::uint64_t seed() const noexcept { return seed_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(seed_ + counter_ * kGoldenGamma);
    }

    /// Uniform on (0, 1]; never returns 0.
    double uniform_open0() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Exp(1) by inversion.
    double exponential() noexcept { return -std::log(uniform_open0()); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace hybridkinetics
