#pragma once

// Reproducible per-path Gaussian increment streams. Each (master_seed,
// path_index) pair yields an independent, platform-stable stream; the
// Box-Muller transform is hand-rolled so the bit pattern does not depend on
// the standard library's normal_distribution implementation.

#include <cmath>
#include <cstdint>
#include <random>

namespace forest {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Brownian increment dW ~ N(0, dt) and iterated integral
// dZ = int_0^dt W_s ds with Var(dZ) = dt^3/3, Cov(dW, dZ) = dt^2/2.
struct NoisePair {
    double dW;
    double dZ;
};

class NoiseStream {
public:
    NoiseStream(std::uint64_t master_seed, std::uint64_t path_index) {
        std::uint64_t s = master_seed;
        detail::splitmix64(s);
        s ^= (path_index + 1) * 0xD1342543DE82EF95ULL;
        const std::uint64_t seed = detail::splitmix64(s);
        rng_.seed(seed);
    }

    double uniform() {  // in (0, 1]
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    NoisePair next(double dt) {
        const double dW = std::sqrt(dt) * normal();
        const double g = normal();
        const double dZ = 0.5 * dt * (dW + g * std::sqrt(dt / 3.0));
        return {dW, dZ};
    }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace forest
