#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>

namespace sicfiber {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// m(x) = (x + pi mod 2pi) - pi, result in [-pi, pi)
inline double wrap_phase(double x) {
    double r = std::fmod(x + kPi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r - kPi;
}

// log I0(z): power series below the switch point, asymptotic expansion above.
// Both branches agree to ~1e-12 relative at z = 20; naive linear-domain
// evaluation overflows near z ~ 700, hence the log-domain form.
inline double log_bessel_i0(double z) {
    z = std::abs(z);
    if (z < 20.0) {
        const double q = 0.25 * z * z;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 200; ++k) {
            term *= q / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return std::log(sum);
    }
    // I0(z) ~ e^z / sqrt(2 pi z) * (1 + 1/(8z) + 9/(2!(8z)^2) + ...)
    double term = 1.0, sum = 1.0;
    for (int k = 0; k < 40; ++k) {
        const double odd = static_cast<double>(2 * k + 1);
        const double next = term * odd * odd / (8.0 * z * static_cast<double>(k + 1));
        if (next >= term) break;  // smallest-term truncation
        term = next;
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return z - 0.5 * std::log(kTwoPi * z) + std::log(sum);
}

inline double log_normal_pdf(double x, double variance) {
    return -0.5 * (x * x / variance + std::log(kTwoPi * variance));
}

// Turn log-weights into a normalized probability vector in place.
inline void normalize_log_probs(std::span<double> logw) {
    const double mx = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(mx))
        throw std::runtime_error("normalize_log_probs: all log-weights are -inf (numeric underflow)");
    double sum = 0.0;
    for (double& v : logw) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logw) v /= sum;
}

// splitmix64; used to derive independent stream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    return mix_seed(mix_seed(mix_seed(master ^ a) ^ b) ^ c);
}

}  // namespace sicfiber
