#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rpg {

/// Seeded generator with platform-independent uniform and normal draws.
/// std::mt19937_64 and std::seed_seq are fully specified by the standard;
/// the distribution adaptors are not, so draws are derived from raw bits.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (one draw per call, no caching).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Index drawn from a probability vector; the last index absorbs rounding.
    template <typename Range>
    std::size_t categorical(const Range& probs) {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last = 0;
        std::size_t i = 0;
        for (double p : probs) {
            if (p > 0.0) {
                acc += p;
                last = i;
                if (u < acc) return i;
            }
            ++i;
        }
        return last;
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace rpg
