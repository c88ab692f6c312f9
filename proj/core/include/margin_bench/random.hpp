#pragma once

// Distribution helpers on top of std::mt19937_64.
//
// The engine's output sequence is fixed by the standard, but the standard
// distributions (uniform_int_distribution, normal_distribution, shuffle) are
// not, so seeded results would differ between standard libraries. Everything
// seeded in this project goes through these functions instead.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace margin_bench::random {

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 bits of precision.
inline double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, bound), unbiased (rejection on the top remainder).
inline std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= limit) return x % bound;
    }
}

/// Standard normal draw (Box-Muller, one variate per call).
inline double standard_normal(Engine& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> values, Engine& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_below(rng, i));
        using std::swap;
        swap(values[i - 1], values[j]);
    }
}

}  // namespace margin_bench::random
