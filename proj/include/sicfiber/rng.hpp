#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "sicfiber/math_util.hpp"

namespace sicfiber {

// Deterministic RNG used everywhere; distributions are hand-rolled so that a
// given seed yields the same stream independent of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(kTwoPi * u2);
        have_spare_ = true;
        return mag * std::cos(kTwoPi * u2);
    }

    // circular complex Gaussian with E|n|^2 = variance
    std::complex<double> circular_gaussian(double variance) {
        const double s = std::sqrt(0.5 * variance);
        return {s * normal(), s * normal()};
    }

    // integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        const std::size_t k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace sicfiber
