#ifndef NERVEPP_RNG_HPP
#define NERVEPP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "nervepp/errors.hpp"
#include "nervepp/pattern.hpp"

namespace nervepp {

/// Mixes a base seed with a task index into an independent stream seed.
/// splitmix64 finalizer; identical results irrespective of thread count.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t z = base_seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// mt19937_64 engine with hand-rolled distributions so that streams are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    explicit Rng(const RngSpec& spec) : eng_(spec.base_seed) {}

    static Rng derived(const RngSpec& spec, std::uint64_t index) {
        return Rng(derive_seed(spec.base_seed, index));
    }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw numeric_error("uniform_index on empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double exponential(double rate) {
        if (!(rate > 0.0)) throw numeric_error("exponential rate must be positive");
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -std::log(u) / rate;
    }

    double normal() {
        // Box-Muller, one value per call.
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Poisson count, exact for any mean: multiplication method below 10,
    /// transformed rejection (PTRS) above.
    std::uint64_t poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean)) throw numeric_error("poisson mean must be >= 0");
        if (mean == 0.0) return 0;
        if (mean < 10.0) return poisson_small(mean);
        return poisson_ptrs(mean);
    }

    /// Draw an index in [0, weights.size()) with probability proportional to weights.
    std::size_t weighted_index(const std::vector<double>& weights, double total) {
        const double target = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (target < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::uint64_t poisson_small(double mean) {
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double prod = uniform();
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        return k;
    }

    // Hoermann's PTRS transformed rejection sampler.
    std::uint64_t poisson_ptrs(double mean) {
        const double slam = std::sqrt(mean);
        const double loglam = std::log(mean);
        const double b = 0.931 + 2.53 * slam;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
                kf * loglam - mean - std::lgamma(kf + 1.0)) {
                return static_cast<std::uint64_t>(kf);
            }
        }
    }

    std::mt19937_64 eng_;
};

} // namespace nervepp

#endif // NERVEPP_RNG_HPP
