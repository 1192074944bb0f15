#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicfiber/math_util.hpp"
#include "sicfiber/rng.hpp"

namespace sicfiber {

// Probabilistically-shaped star QAM: Rayleigh-weighted rings, uniform phases.
// Immutable after construction; safe to share across workers.
struct Constellation {
    std::vector<double> radii;       // strictly increasing, sqrt-power units
    std::vector<double> radial_pmf;  // sums to 1
    int n_p = 0;                     // phase cardinality
    std::vector<double> phase_set;   // {0, 2pi/n_p, ...}
    double ptx = 0.0;                // average transmit power, linear watts

    std::size_t n_rings() const { return radii.size(); }
    std::size_t size() const { return radii.size() * static_cast<std::size_t>(n_p); }

    std::complex<double> point(std::size_t radius_idx, std::size_t phase_idx) const {
        return std::polar(radii[radius_idx], phase_set[phase_idx]);
    }

    double average_power() const {
        double p = 0.0;
        for (std::size_t k = 0; k < radii.size(); ++k) p += radial_pmf[k] * radii[k] * radii[k];
        return p;
    }
};

struct SymbolSequence {
    std::vector<int> radius_idx;
    std::vector<int> phase_idx;
    std::vector<std::complex<double>> values;

    std::size_t size() const { return values.size(); }
};

// Discretize a CSCG density: uniformly spaced rings r_k = k*delta on
// (0, truncation*sqrt(ptx)], Rayleigh-shaped ring PMF, then a global radius
// rescale so the average power equals ptx exactly.
inline Constellation build_star_qam(int n_rings, int n_phases, double ptx,
                                    double truncation = 3.2) {
    if (n_rings < 1) throw std::invalid_argument("build_star_qam: n_rings must be >= 1");
    if (n_phases < 1) throw std::invalid_argument("build_star_qam: n_phases must be >= 1");
    if (!(ptx > 0.0)) throw std::invalid_argument("build_star_qam: ptx must be > 0");
    if (!(truncation > 0.0)) throw std::invalid_argument("build_star_qam: truncation must be > 0");

    Constellation c;
    c.n_p = n_phases;
    c.ptx = ptx;
    const double delta = truncation * std::sqrt(ptx) / static_cast<double>(n_rings);
    c.radii.resize(n_rings);
    c.radial_pmf.resize(n_rings);
    double norm = 0.0;
    for (int k = 0; k < n_rings; ++k) {
        const double r = static_cast<double>(k + 1) * delta;
        c.radii[k] = r;
        const double w = r * std::exp(-r * r / ptx);
        if (w <= 0.0)
            throw std::invalid_argument(
                "build_star_qam: ring PMF underflows to 0; reduce truncation");
        c.radial_pmf[k] = w;
        norm += w;
    }
    double pavg = 0.0;
    for (int k = 0; k < n_rings; ++k) {
        c.radial_pmf[k] /= norm;
        pavg += c.radial_pmf[k] * c.radii[k] * c.radii[k];
    }
    const double scale = std::sqrt(ptx / pavg);
    for (double& r : c.radii) r *= scale;

    c.phase_set.resize(n_phases);
    for (int j = 0; j < n_phases; ++j)
        c.phase_set[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n_phases);
    return c;
}

inline SymbolSequence sample_sequence(const Constellation& c, std::size_t n,
                                      std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_sequence: n must be >= 1");
    SymbolSequence seq;
    seq.radius_idx.resize(n);
    seq.phase_idx.resize(n);
    seq.values.resize(n);

    std::vector<double> cdf(c.radial_pmf.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < c.radial_pmf.size(); ++k) {
        acc += c.radial_pmf[k];
        cdf[k] = acc;
    }
    cdf.back() = 1.0;

    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t ri = 0;
        while (ri + 1 < cdf.size() && u >= cdf[ri]) ++ri;
        const std::size_t pi = rng.uniform_index(static_cast<std::size_t>(c.n_p));
        seq.radius_idx[i] = static_cast<int>(ri);
        seq.phase_idx[i] = static_cast<int>(pi);
        seq.values[i] = c.point(ri, pi);
    }
    return seq;
}

struct SourceEntropy {
    double h_radius_bits;
    double h_phase_bits;
    double total() const { return h_radius_bits + h_phase_bits; }
};

inline SourceEntropy source_entropy(const Constellation& c) {
    double h = 0.0;
    for (double p : c.radial_pmf)
        if (p > 0.0) h -= p * std::log2(p);
    return {h, std::log2(static_cast<double>(c.n_p))};
}

}  // namespace sicfiber
