#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace softirl {

/// SplitMix64 step. Used for seeding and for deriving child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Child seed for stream `index` of a parent seed.
///
/// Stream-splitting rule: child = splitmix64 applied twice to
/// (parent ^ golden * (index + 1)). Every sampled trajectory, replicate, and
/// grid cell draws from its own child stream, so results never depend on the
/// order (or the thread) in which streams are consumed.
constexpr std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    std::uint64_t s = parent ^ (0xD1B54A32D192ED03ULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// xoshiro256** 1.0. Portable and bit-reproducible across platforms; all
/// derived draws (uniform, normal, categorical) are implemented here rather
/// than through <random> distributions, whose output is implementation
/// defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() noexcept {
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

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() noexcept {
        const double u1 = uniform_open0();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Exponential(1).
    double exponential() noexcept { return -std::log(uniform_open0()); }

    /// Inverse-CDF draw from a probability vector. Never returns an index with
    /// zero probability, even when rounding leaves the cumulative sum short of
    /// the uniform draw.
    std::size_t categorical(std::span<const double> probs) noexcept {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last_positive = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

} // namespace softirl
