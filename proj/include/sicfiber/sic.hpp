#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/cpan.hpp"
#include "sicfiber/math_util.hpp"

namespace sicfiber {

// Row-major matrix of per-symbol categorical posteriors.
struct PosteriorTable {
    std::size_t alphabet = 0;
    std::vector<double> probs;

    std::size_t n_rows() const { return alphabet ? probs.size() / alphabet : 0; }
    std::span<double> row(std::size_t i) { return {probs.data() + i * alphabet, alphabet}; }
    std::span<const double> row(std::size_t i) const {
        return {probs.data() + i * alphabet, alphabet};
    }
};

// Gaussian phase summaries (mu_i, sigma_i^2) produced by the smoother.
struct PhaseBelief {
    std::vector<double> mu;
    std::vector<double> sigma_sq;
};

// Round-robin stage assignment: symbol i is phase-detected in stage (i mod S) + 1.
// For S = 2 this is the [alpha1, beta1, alpha2, beta2, ...] interleaving.
struct SicSchedule {
    int n_stages = 1;

    explicit SicSchedule(int s) : n_stages(s) {
        if (s < 1) throw std::invalid_argument("SicSchedule: n_stages must be >= 1");
    }
    int stage_of(std::size_t i) const {
        return static_cast<int>(i % static_cast<std::size_t>(n_stages)) + 1;
    }
    std::vector<std::size_t> symbols_of_stage(int s, std::size_t n) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = static_cast<std::size_t>(s - 1); i < n;
             i += static_cast<std::size_t>(n_stages))
            idx.push_back(i);
        return idx;
    }
};

// q(r|y_i) with f(r) = exp(-r^2/sn2) * I0(2|y|r/sn2), log domain.
inline void amplitude_posterior(std::complex<double> y, const Constellation& c,
                                const CpanParams& params, std::span<double> out) {
    if (!(params.sigma_n_sq > 0.0))
        throw std::invalid_argument("amplitude_posterior: sigma_n_sq must be > 0");
    const double ay = std::abs(y);
    const double inv = 1.0 / params.sigma_n_sq;
    for (std::size_t k = 0; k < c.radii.size(); ++k) {
        const double r = c.radii[k];
        out[k] = std::log(c.radial_pmf[k]) - r * r * inv + log_bessel_i0(2.0 * ay * r * inv);
    }
    normalize_log_probs(out);
}

inline std::vector<double> amplitude_posterior(std::complex<double> y, const Constellation& c,
                                               const CpanParams& params) {
    std::vector<double> out(c.radii.size());
    amplitude_posterior(y, c, params, out);
    return out;
}

namespace detail {

// Shared Gaussian phase metric: weight of each gamma is
// N(m(angle(y) - gamma - mean_shift); 0, var). |y| = 0 falls back to uniform.
inline void gaussian_phase_posterior(std::complex<double> y, double r, double prior_var,
                                     double mean_shift, const Constellation& c,
                                     const CpanParams& params, std::span<double> out) {
    const double ay = std::abs(y);
    if (ay == 0.0) {
        const double u = 1.0 / static_cast<double>(c.n_p);
        for (auto& v : out) v = u;
        return;
    }
    if (!(r > 0.0)) throw std::invalid_argument("phase posterior: r must be > 0");
    if (!(params.sigma_n_sq > 0.0))
        throw std::invalid_argument("phase posterior: sigma_n_sq must be > 0");
    const double var = prior_var + params.sigma_n_sq / (2.0 * ay * r);
    const double psi = std::arg(y) - mean_shift;
    for (int j = 0; j < c.n_p; ++j) {
        const double d = wrap_phase(psi - c.phase_set[j]);
        out[j] = -0.5 * d * d / var;
    }
    normalize_log_probs(out);
}

}  // namespace detail

inline void phase_stage1_posterior(std::complex<double> y, double r, const Constellation& c,
                                   const CpanParams& params, std::span<double> out) {
    detail::gaussian_phase_posterior(y, r, params.sigma_theta_sq, 0.0, c, params, out);
}

inline std::vector<double> phase_stage1_posterior(std::complex<double> y, double r,
                                                  const Constellation& c,
                                                  const CpanParams& params) {
    std::vector<double> out(static_cast<std::size_t>(c.n_p));
    phase_stage1_posterior(y, r, c, params, out);
    return out;
}

inline void phase_stagek_posterior(std::complex<double> y, double r, double belief_mu,
                                   double belief_sigma_sq, const Constellation& c,
                                   const CpanParams& params, std::span<double> out) {
    if (!(belief_sigma_sq > 0.0))
        throw std::invalid_argument("phase_stagek_posterior: belief variance must be > 0");
    detail::gaussian_phase_posterior(y, r, belief_sigma_sq, belief_mu, c, params, out);
}

inline std::vector<double> phase_stagek_posterior(std::complex<double> y, double r,
                                                  double belief_mu, double belief_sigma_sq,
                                                  const Constellation& c,
                                                  const CpanParams& params) {
    std::vector<double> out(static_cast<std::size_t>(c.n_p));
    phase_stagek_posterior(y, r, belief_mu, belief_sigma_sq, c, params, out);
    return out;
}

struct SmootherResult {
    PhaseBelief belief;
    std::size_t message_count = 0;  // 5n-3 under the schedule documented below
};

// Gaussian forward-backward smoothing on the AR(1) phase chain.
//
// Pseudo-measurements z_i = m(angle(y_i) - gamma_i) with variance
// v_i = sn2 / (2 |y_i| r_i) at positions where gamma_i is known (known_gamma
// finite); other positions carry a vacuous infinite-variance measurement.
// The belief at position i combines the forward predictive (measurements < i)
// with the backward likelihood (measurements > i), so every output excludes
// its own measurement (leave-one-out at measured positions).
//
// Message schedule, counted: 1 prior message into theta_0, n measurement
// messages (vacuous ones included), and per chain edge two messages in each
// direction (variable->transition factor, factor->variable), forward and
// backward: 1 + n + 4(n-1) = 5n - 3.
//
// Forward innovations are wrapped with m(.); backward combination is carried
// in natural parameters and posterior means are left unwrapped — downstream
// consumers re-wrap differences with m(.) themselves.
inline SmootherResult phase_smoother(std::span<const std::complex<double>> y,
                                     std::span<const double> r,
                                     std::span<const double> known_gamma,
                                     const CpanParams& params) {
    const std::size_t n = y.size();
    if (r.size() != n || known_gamma.size() != n)
        throw std::invalid_argument("phase_smoother: length mismatch");
    if (n == 0) throw std::invalid_argument("phase_smoother: empty input");
    for (std::size_t i = 0; i < n; ++i)
        if (!(r[i] > 0.0)) throw std::invalid_argument("phase_smoother: r must be > 0");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> z(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isfinite(known_gamma[i])) {
            const double ay = std::abs(y[i]);
            if (ay == 0.0) {
                v[i] = kInf;  // divergent measurement variance: skip
                z[i] = 0.0;
            } else {
                z[i] = wrap_phase(std::arg(y[i]) - known_gamma[i]);
                v[i] = params.sigma_n_sq / (2.0 * ay * r[i]);
            }
        } else {
            v[i] = kInf;
            z[i] = 0.0;
        }
    }

    SmootherResult res;
    res.belief.mu.assign(n, 0.0);
    res.belief.sigma_sq.assign(n, 0.0);
    std::size_t messages = 1;  // prior -> theta_0

    const double mu_d = params.mu_delta;
    const double sd2 = params.sigma_delta_sq;

    // forward predictive p(theta_i | z_{<i})
    std::vector<double> m_f(n), v_f(n);
    m_f[0] = 0.0;
    v_f[0] = params.sigma_theta_sq;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double m_flt = m_f[i], v_flt = v_f[i];
        if (std::isfinite(v[i]) && v_f[i] > 0.0) {
            const double gain = v_f[i] / (v_f[i] + v[i]);
            m_flt = m_f[i] + gain * wrap_phase(z[i] - m_f[i]);
            v_flt = (1.0 - gain) * v_f[i];
        }
        m_f[i + 1] = mu_d * m_flt;
        v_f[i + 1] = mu_d * mu_d * v_flt + sd2;
        messages += 2;  // variable -> transition factor, factor -> variable
    }

    // backward likelihood of z_{>i}, natural parameters (precision, precision*mean)
    std::vector<double> lam_b(n, 0.0), h_b(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        double lam_c = lam_b[i + 1], h_c = h_b[i + 1];
        if (std::isfinite(v[i + 1])) {
            lam_c += 1.0 / v[i + 1];
            h_c += z[i + 1] / v[i + 1];
        }
        const double denom = 1.0 + sd2 * lam_c;
        lam_b[i] = mu_d * mu_d * lam_c / denom;
        h_b[i] = mu_d * h_c / denom;
        messages += 2;
    }
    messages += n;  // measurement factor -> variable, one per position

    for (std::size_t i = 0; i < n; ++i) {
        if (v_f[i] > 0.0) {
            const double lam = 1.0 / v_f[i] + lam_b[i];
            res.belief.sigma_sq[i] = 1.0 / lam;
            res.belief.mu[i] = (m_f[i] / v_f[i] + h_b[i]) / lam;
        } else {
            res.belief.sigma_sq[i] = 0.0;
            res.belief.mu[i] = m_f[i];
        }
    }
    res.message_count = messages;
    return res;
}

struct SicResult {
    PosteriorTable amplitude;                  // n x n_rings
    std::vector<PosteriorTable> phase_stages;  // stage s: |symbols of s| x n_p
    std::vector<std::vector<std::size_t>> stage_symbols;
};

// Full genie-aided SIC pass: amplitude SDD stage, then S phase stages where
// stage s >= 2 conditions on the true phases of all earlier stages via the
// smoother. True amplitudes are used for every phase stage.
inline SicResult run_sic(std::span<const std::complex<double>> y, const SymbolSequence& truth,
                         const SicSchedule& schedule, const Constellation& c,
                         const CpanParams& params) {
    const std::size_t n = y.size();
    if (truth.size() != n) throw std::invalid_argument("run_sic: length mismatch");

    SicResult res;
    res.amplitude.alphabet = c.radii.size();
    res.amplitude.probs.resize(n * c.radii.size());
    for (std::size_t i = 0; i < n; ++i)
        amplitude_posterior(y[i], c, params, res.amplitude.row(i));

    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = c.radii[truth.radius_idx[i]];

    const std::size_t np = static_cast<std::size_t>(c.n_p);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int s = 1; s <= schedule.n_stages; ++s) {
        auto symbols = schedule.symbols_of_stage(s, n);
        PosteriorTable table;
        table.alphabet = np;
        table.probs.resize(symbols.size() * np);
        if (s == 1) {
            for (std::size_t k = 0; k < symbols.size(); ++k) {
                const std::size_t i = symbols[k];
                phase_stage1_posterior(y[i], r[i], c, params, table.row(k));
            }
        } else {
            std::vector<double> known(n, nan);
            for (std::size_t i = 0; i < n; ++i)
                if (schedule.stage_of(i) < s) known[i] = c.phase_set[truth.phase_idx[i]];
            auto smoothed = phase_smoother(y, r, known, params);
            for (std::size_t k = 0; k < symbols.size(); ++k) {
                const std::size_t i = symbols[k];
                phase_stagek_posterior(y[i], r[i], smoothed.belief.mu[i],
                                       smoothed.belief.sigma_sq[i], c, params, table.row(k));
            }
        }
        res.phase_stages.push_back(std::move(table));
        res.stage_symbols.push_back(std::move(symbols));
    }
    return res;
}

}  // namespace sicfiber
