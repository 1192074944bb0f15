#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/math_util.hpp"
#include "sicfiber/rng.hpp"
#include "sicfiber/sic.hpp"

namespace sicfiber {

struct StageAir {
    double bits = 0.0;      // clamped at 0
    double raw_bits = 0.0;  // unclamped estimate
    bool clamped = false;
    bool zero_posterior = false;  // some q(truth) == 0 was floored
};

// Mismatched-decoding lower-bound contribution of one stage:
// symbols_per_use * mean_i [log2 q(truth_i|.) - log2 P(truth_i)].
inline StageAir stage_air(const PosteriorTable& posteriors, std::span<const int> truth_idx,
                          std::span<const double> prior, double symbols_per_use) {
    const std::size_t n = posteriors.n_rows();
    if (truth_idx.size() != n) throw std::invalid_argument("stage_air: truth length mismatch");
    if (prior.size() != posteriors.alphabet)
        throw std::invalid_argument("stage_air: prior size mismatch");
    for (double p : prior)
        if (!(p > 0.0)) throw std::invalid_argument("stage_air: prior must be strictly positive");

    StageAir out;
    constexpr double kLogFloor = -1074.0 * 0.30102999566398120;  // log2(min subnormal) in bits
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int t = truth_idx[i];
        const double q = posteriors.row(i)[static_cast<std::size_t>(t)];
        double lq;
        if (q > 0.0) {
            lq = std::log2(q);
        } else {
            lq = kLogFloor;
            out.zero_posterior = true;
        }
        acc += lq - std::log2(prior[static_cast<std::size_t>(t)]);
    }
    out.raw_bits = symbols_per_use * acc / static_cast<double>(n);
    out.bits = out.raw_bits;
    if (out.bits < 0.0) {
        out.bits = 0.0;
        out.clamped = true;
    }
    return out;
}

struct AirResult {
    std::vector<double> per_stage_bits;  // amplitude stage first, then phase stages
    double total_bits = 0.0;
    std::size_t n_symbols_used = 0;
    double std_error = 0.0;
    bool clamped = false;
};

// Assemble the full SIC AIR from a run_sic result. Amplitude contributes on
// every symbol (weight 1); phase stage s contributes on its own subset with
// weight n_stage/n, so stage contributions sum per channel use.
inline AirResult air_from_sic(const SicResult& sic, const SymbolSequence& truth,
                              const Constellation& c) {
    const std::size_t n = truth.size();
    AirResult res;
    res.n_symbols_used = n;

    auto amp = stage_air(sic.amplitude, truth.radius_idx, c.radial_pmf, 1.0);
    res.per_stage_bits.push_back(amp.bits);
    res.clamped |= amp.clamped;

    const std::vector<double> uniform(static_cast<std::size_t>(c.n_p),
                                      1.0 / static_cast<double>(c.n_p));
    for (std::size_t s = 0; s < sic.phase_stages.size(); ++s) {
        const auto& symbols = sic.stage_symbols[s];
        std::vector<int> t(symbols.size());
        for (std::size_t k = 0; k < symbols.size(); ++k) t[k] = truth.phase_idx[symbols[k]];
        const double spu = static_cast<double>(symbols.size()) / static_cast<double>(n);
        auto st = stage_air(sic.phase_stages[s], t, uniform, spu);
        res.per_stage_bits.push_back(st.bits);
        res.clamped |= st.clamped;
    }
    for (double b : res.per_stage_bits) res.total_bits += b;

    // iid per-symbol spread; sequence-level spread is computed by the caller
    // when multiple sequences are available
    double m1 = 0.0, m2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double qa = sic.amplitude.row(i)[static_cast<std::size_t>(truth.radius_idx[i])];
        if (qa > 0.0) {
            const double u = std::log2(qa) - std::log2(c.radial_pmf[truth.radius_idx[i]]);
            m1 += u;
            m2 += u * u;
            ++cnt;
        }
    }
    if (cnt > 1) {
        const double mean = m1 / static_cast<double>(cnt);
        const double var = std::max(0.0, m2 / static_cast<double>(cnt) - mean * mean);
        res.std_error = std::sqrt(var / static_cast<double>(cnt));
    }
    return res;
}

inline double awgn_air_gaussian(double snr_db) {
    return std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

struct MonteCarloAir {
    double bits = 0.0;
    double std_error = 0.0;
};

namespace detail {

// log sum_x P(x) exp(-|y-x|^2/sn2) over the full star-QAM alphabet, with the
// constant |y|^2 and phase-lattice structure factored out; scratch holds one
// value per constellation point.
inline double alphabet_log_mixture(std::complex<double> y, const Constellation& c,
                                   double sigma_sq, std::span<double> scratch) {
    const double ay = std::abs(y);
    const double psi = std::arg(y);
    const double inv = 1.0 / sigma_sq;
    const double log_np = std::log(static_cast<double>(c.n_p));
    const std::size_t np = static_cast<std::size_t>(c.n_p);
    const double dphi = kTwoPi / static_cast<double>(c.n_p);
    const std::complex<double> rot = std::polar(1.0, -dphi);
    std::size_t m = 0;
    std::complex<double> ph = std::polar(1.0, psi);
    std::vector<double> cosv(np);
    for (std::size_t j = 0; j < np; ++j) {
        cosv[j] = ph.real();
        ph *= rot;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < c.radii.size(); ++k) {
        const double r = c.radii[k];
        const double base = std::log(c.radial_pmf[k]) - log_np - (ay * ay + r * r) * inv;
        const double coef = 2.0 * ay * r * inv;
        for (std::size_t j = 0; j < np; ++j) {
            const double lw = base + coef * cosv[j];
            scratch[m++] = lw;
            if (lw > mx) mx = lw;
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += std::exp(scratch[i] - mx);
    return mx + std::log(sum);
}

}  // namespace detail

// Monte Carlo I(X;Y) for Y = X + N on the memoryless AWGN channel, noise
// variance ptx / SNR.
inline MonteCarloAir awgn_air_starqam(const Constellation& c, double snr_db, std::size_t n_mc,
                                      std::uint64_t seed) {
    if (n_mc < 10000) throw std::invalid_argument("awgn_air_starqam: n_mc must be >= 1e4");
    const double sigma_sq = c.ptx / std::pow(10.0, snr_db / 10.0);
    Rng rng(seed);

    std::vector<double> cdf(c.radial_pmf.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        acc += c.radial_pmf[k];
        cdf[k] = acc;
    }
    cdf.back() = 1.0;

    std::vector<double> scratch(c.size());
    const double log_np = std::log(static_cast<double>(c.n_p));
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        const double u = rng.uniform();
        std::size_t ri = 0;
        while (ri + 1 < cdf.size() && u >= cdf[ri]) ++ri;
        const std::size_t pi = rng.uniform_index(static_cast<std::size_t>(c.n_p));
        const std::complex<double> x = c.point(ri, pi);
        const std::complex<double> y = x + rng.circular_gaussian(sigma_sq);
        const double log_lik = -std::norm(y - x) / sigma_sq;
        const double log_prior = std::log(c.radial_pmf[ri]) - log_np;
        const double log_mix = detail::alphabet_log_mixture(y, c, sigma_sq, scratch);
        const double info = (log_lik + log_prior - log_mix) / std::numbers::ln2 -
                            log_prior / std::numbers::ln2;
        m1 += info;
        m2 += info * info;
    }
    MonteCarloAir out;
    out.bits = m1 / static_cast<double>(n_mc);
    const double var =
        std::max(0.0, m2 / static_cast<double>(n_mc) - out.bits * out.bits);
    out.std_error = std::sqrt(var / static_cast<double>(n_mc));
    return out;
}

// Noise-variance fit for the memoryless surrogate: sigma_theta_sq forced to 0,
// so the fitted variance absorbs the phase-noise power.
inline double fit_memoryless_sigma_sq(std::span<const std::complex<double>> y,
                                      const SymbolSequence& x) {
    if (y.size() != x.size() || y.empty())
        throw std::invalid_argument("fit_memoryless_sigma_sq: bad input");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::norm(y[i] - x.values[i]);
    return acc / static_cast<double>(y.size());
}

// Mismatched memoryless AWGN baseline: single-stage posterior over the full
// complex alphabet, q(x|y) propto P(x) exp(-|y-x|^2 / sigma_fit^2).
inline StageAir memoryless_baseline_air(std::span<const std::complex<double>> y,
                                        const SymbolSequence& truth, const Constellation& c,
                                        double sigma_n_sq_fit) {
    if (!(sigma_n_sq_fit > 0.0))
        throw std::invalid_argument("memoryless_baseline_air: sigma_n_sq_fit must be > 0");
    const std::size_t n = y.size();
    if (truth.size() != n) throw std::invalid_argument("memoryless_baseline_air: length mismatch");

    StageAir out;
    std::vector<double> scratch(c.size());
    const double log_np = std::log(static_cast<double>(c.n_p));
    constexpr double kLogFloor = -1074.0 * 0.30102999566398120;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> x = truth.values[i];
        const double log_post_num = std::log(c.radial_pmf[truth.radius_idx[i]]) - log_np -
                                    std::norm(y[i] - x) / sigma_n_sq_fit;
        const double log_mix = detail::alphabet_log_mixture(y[i], c, sigma_n_sq_fit, scratch);
        const double log_prior = std::log(c.radial_pmf[truth.radius_idx[i]]) - log_np;
        double lq = (log_post_num - log_mix) / std::numbers::ln2;
        if (!std::isfinite(lq)) {
            lq = kLogFloor;
            out.zero_posterior = true;
        }
        acc += lq - log_prior / std::numbers::ln2;
    }
    out.raw_bits = acc / static_cast<double>(n);
    out.bits = out.raw_bits;
    if (out.bits < 0.0) {
        out.bits = 0.0;
        out.clamped = true;
    }
    return out;
}

}  // namespace sicfiber
