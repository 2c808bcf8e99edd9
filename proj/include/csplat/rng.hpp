#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace csplat {

/// Seeded random source with fully specified output: the engine is
/// std::mt19937_64 (bit-exact by the standard) and all distribution
/// transforms are implemented here rather than taken from <random>,
/// whose distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniformInt(std::uint64_t n) {
        // Modulo bias is < 2^-53 for any n this project draws; acceptable.
        return std::uint64_t(uniform() * double(n));
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool coin() { return (eng_() & 1u) != 0; }

private:
    std::mt19937_64 eng_;
};

}  // namespace csplat
