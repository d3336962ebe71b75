#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mcmarket {

/// SplitMix64 — used only to expand seeds into generator state.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256** — the process-wide pseudo-random generator.
///
/// Every Monte Carlo replication draws from its own stream derived as
/// `Rng::path_stream(seed, path_index)`, which seeds the state through
/// SplitMix64 from `seed XOR (path_index+1)*golden_gamma`. Identical
/// (seed, path_index) pairs give bit-identical streams on every platform;
/// nothing here depends on libstdc++ distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    /// Independent stream for one replication of a seeded experiment.
    static Rng path_stream(std::uint64_t seed, std::uint64_t path_index) {
        return Rng(seed ^ ((path_index + 1) * 0x9E3779B97F4A7C15ULL));
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1] (safe as a log argument).
    double uniform01_open_left() { return 1.0 - uniform01(); }

    /// Exponential holding time via inverse CDF.
    double exponential(double rate) {
        return -std::log(uniform01_open_left()) / rate;
    }

    /// Index j with probability weights[j]/total over k entries.
    int categorical(const double* weights, int k, double total) {
        double u = uniform01() * total;
        for (int j = 0; j < k - 1; ++j) {
            u -= weights[j];
            if (u < 0.0) return j;
        }
        return k - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int b) {
        return (x << b) | (x >> (64 - b));
    }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace mcmarket
