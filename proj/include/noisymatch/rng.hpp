#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace noisymatch {

/// SplitMix64 finalizer. Bijective on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent sub-streams of one replication.
enum class StreamTag : std::uint64_t {
    values = 1,
    preferences = 2,
    noise = 3,
    diagnostics = 4,
};

/// Child seed for (master, replication, stream). Each component passes through
/// the mixer so neighbouring replications and tags land far apart.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication,
                                    StreamTag tag) noexcept {
    std::uint64_t h = mix64(master);
    h = mix64(h ^ mix64(replication + 0x632BE59BD9B4E019ULL));
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(tag) + 0xD1B54A32D192ED03ULL));
    return h;
}

/// Explicit RNG state. All sampling goes through `uniform01` so streams are
/// reproducible across standard library implementations.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform01() {
        // 53 random mantissa bits, offset by half an ulp to exclude 0.
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Lemire's unbiased method.
    std::uint64_t below(std::uint64_t n) {
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (one variate per call, no cached state).
    double standard_normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    engine_type& engine() noexcept { return engine_; }

private:
    engine_type engine_;
};

/// Fisher-Yates shuffle driven by `Rng::below`.
template <class It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
}

} // namespace noisymatch
