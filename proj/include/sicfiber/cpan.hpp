#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/math_util.hpp"
#include "sicfiber/rng.hpp"

namespace sicfiber {

// theta_i = mu_delta * theta_{i-1} + sigma_delta * delta_i, y_i = x_i e^{j theta_i} + n_i
struct CpanParams {
    double mu_delta = 0.0;        // in (-1, 1)
    double sigma_delta_sq = 0.0;  // innovation variance, rad^2
    double sigma_theta_sq = 0.0;  // steady-state variance, rad^2
    double sigma_n_sq = 0.0;      // additive noise variance, linear power
};

inline double steady_state_variance(double mu_delta, double sigma_delta_sq) {
    if (!(std::abs(mu_delta) < 1.0))
        throw std::invalid_argument("steady_state_variance: |mu_delta| must be < 1");
    return sigma_delta_sq / (1.0 - mu_delta * mu_delta);
}

inline CpanParams make_cpan_params(double mu_delta, double sigma_theta_sq, double sigma_n_sq) {
    if (!(std::abs(mu_delta) < 1.0))
        throw std::invalid_argument("make_cpan_params: |mu_delta| must be < 1");
    if (sigma_theta_sq < 0.0)
        throw std::invalid_argument("make_cpan_params: sigma_theta_sq must be >= 0");
    CpanParams p;
    p.mu_delta = mu_delta;
    p.sigma_theta_sq = sigma_theta_sq;
    p.sigma_delta_sq = sigma_theta_sq * (1.0 - mu_delta * mu_delta);
    p.sigma_n_sq = sigma_n_sq;
    return p;
}

inline void validate(const CpanParams& p) {
    if (!(std::abs(p.mu_delta) < 1.0)) throw std::invalid_argument("CpanParams: |mu_delta| >= 1");
    const double ss = p.sigma_delta_sq / (1.0 - p.mu_delta * p.mu_delta);
    const double ref = std::max(std::abs(ss), std::abs(p.sigma_theta_sq));
    if (ref > 0.0 && std::abs(ss - p.sigma_theta_sq) > 1e-12 * ref)
        throw std::invalid_argument("CpanParams: steady-state relation violated");
    if (p.sigma_delta_sq < 0.0 || p.sigma_theta_sq < 0.0)
        throw std::invalid_argument("CpanParams: negative variance");
}

struct ChannelRealization {
    std::vector<std::complex<double>> y;
    std::vector<double> theta;
};

inline ChannelRealization simulate(const CpanParams& params, const SymbolSequence& x,
                                   std::uint64_t seed) {
    validate(params);
    const std::size_t n = x.size();
    if (n < 1) throw std::invalid_argument("simulate: empty input sequence");

    ChannelRealization out;
    out.y.resize(n);
    out.theta.resize(n);
    Rng rng(seed);
    const double sigma_delta = std::sqrt(params.sigma_delta_sq);
    double theta = std::sqrt(params.sigma_theta_sq) * rng.normal();  // steady-state start
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) theta = params.mu_delta * theta + sigma_delta * rng.normal();
        out.theta[i] = theta;
        std::complex<double> noise{0.0, 0.0};
        if (params.sigma_n_sq > 0.0) noise = rng.circular_gaussian(params.sigma_n_sq);
        out.y[i] = x.values[i] * std::polar(1.0, theta) + noise;
    }
    return out;
}

struct CpanFit {
    CpanParams params;
    bool degenerate = false;  // zero-variance or otherwise uninformative training data
};

// Moment-matching fit from genie training pairs. Per-symbol phase estimates
// theta_hat = m(angle(y/x)) carry white additive-noise contamination, so the
// AR(1) parameters come from the lag-1/lag-2 autocovariance ratio (contamination
// cancels at nonzero lags) rather than from the raw sample variance.
// sigma_n_sq = 2 * mean radial residual power: the phase-direction half of the
// complex noise is absorbed into theta_hat, the radial residual keeps the other
// half. Assumes wrap-free training SNR (|angle(y/x) - theta| < pi).
inline CpanFit fit_params(
    std::span<const std::pair<const SymbolSequence*, const std::vector<std::complex<double>>*>>
        training) {
    if (training.empty()) throw std::invalid_argument("fit_params: empty training set");

    double sum = 0.0, sum_resid = 0.0;
    std::size_t count = 0;
    std::vector<std::vector<double>> theta_hat(training.size());
    for (std::size_t s = 0; s < training.size(); ++s) {
        const SymbolSequence& x = *training[s].first;
        const std::vector<std::complex<double>>& y = *training[s].second;
        if (x.size() != y.size() || x.size() == 0)
            throw std::invalid_argument("fit_params: mismatched or empty training pair");
        theta_hat[s].resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = std::abs(x.values[i]);
            if (r == 0.0) throw std::invalid_argument("fit_params: zero-amplitude symbol");
            const double th = wrap_phase(std::arg(y[i] / x.values[i]));
            theta_hat[s][i] = th;
            sum += th;
            const std::complex<double> resid = y[i] - x.values[i] * std::polar(1.0, th);
            sum_resid += std::norm(resid);
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    for (const auto& th : theta_hat) {  // autocovariances never cross sequence boundaries
        for (std::size_t i = 0; i < th.size(); ++i) {
            const double a = th[i] - mean;
            c0 += a * a;
            if (i + 1 < th.size()) {
                c1 += a * (th[i + 1] - mean);
                ++n1;
            }
            if (i + 2 < th.size()) {
                c2 += a * (th[i + 2] - mean);
                ++n2;
            }
        }
    }
    c0 /= static_cast<double>(count);
    c1 = n1 ? c1 / static_cast<double>(n1) : 0.0;
    c2 = n2 ? c2 / static_cast<double>(n2) : 0.0;

    constexpr double kMuMax = 1.0 - 1e-9;
    CpanFit fit;
    fit.params.sigma_n_sq = 2.0 * sum_resid / static_cast<double>(count);
    if (c0 < 1e-24 || c1 <= 0.0 || c2 <= 0.0) {
        // white, constant, or anti-correlated phase track: AR(1) memory unidentifiable
        fit.degenerate = true;
        double mu = (c0 > 0.0 && c1 > 0.0) ? c1 / c0 : 0.0;
        fit.params.mu_delta = std::clamp(mu, 0.0, kMuMax);
        fit.params.sigma_theta_sq = c0 < 1e-24 ? 0.0 : c0;
    } else {
        fit.params.mu_delta = std::clamp(c2 / c1, 0.0, kMuMax);
        fit.params.sigma_theta_sq = std::min(c1 * c1 / c2, c0);
    }
    fit.params.sigma_delta_sq =
        fit.params.sigma_theta_sq * (1.0 - fit.params.mu_delta * fit.params.mu_delta);
    return fit;
}

// Convenience overload for owned training data.
inline CpanFit fit_params(
    const std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>>& training) {
    std::vector<std::pair<const SymbolSequence*, const std::vector<std::complex<double>>*>> refs;
    refs.reserve(training.size());
    for (const auto& [x, y] : training) refs.emplace_back(&x, &y);
    return fit_params(std::span(refs));
}

}  // namespace sicfiber
