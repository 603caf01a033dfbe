#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace pentropy::rng {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic random stream: a seeded mt19937_64 plus hand-rolled
/// distributions, so the draw sequence is fixed by the seed alone and does
/// not depend on the standard library's distribution implementations.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; draws are produced in pairs and the
    /// second value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // Guard against log(0).
        while (u1 == 0.0) u1 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Index draw from a cumulative mass table (inclusive prefix sums,
    /// last entry ~1).  Returns the first index whose cumulative mass
    /// exceeds the uniform draw.
    std::size_t categorical(std::span<const double> cdf) {
        const double u = uniform01();
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cdf[mid] > u)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny against 2^64.
        return engine_() % n;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Number of samples handled per batch stream.  Fixed so that the batch
/// decomposition (and therefore every count) is a pure function of
/// (n_samples, seed), no matter how batches are scheduled.
inline constexpr std::uint64_t kBatchSize = 1u << 16;

/// Independent stream for one batch: seed + batch_index fed through
/// SplitMix64 before seeding the engine.
inline Stream batch_stream(std::uint64_t seed, std::uint64_t batch_index) {
    return Stream(splitmix64(seed + batch_index));
}

/// Derived seed for a sub-task (e.g. per-j estimates inside one report).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (tag + 1)));
}

}  // namespace pentropy::rng
