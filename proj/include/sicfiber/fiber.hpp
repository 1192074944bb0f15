#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/math_util.hpp"
#include "sicfiber/rng.hpp"

namespace sicfiber {

// RAII wrapper over one-size FFTW plans, 1/N-normalized inverse.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        buf_ = fftw_alloc_complex(n);
        if (!buf_) throw std::bad_alloc();
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(buf_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(std::vector<std::complex<double>>& data) { run(data, fwd_, 1.0); }
    void inverse(std::vector<std::complex<double>>& data) {
        run(data, inv_, 1.0 / static_cast<double>(n_));
    }

private:
    void run(std::vector<std::complex<double>>& data, fftw_plan plan, double scale) {
        if (data.size() != n_) throw std::invalid_argument("Fft: size mismatch");
        std::memcpy(buf_, data.data(), n_ * sizeof(fftw_complex));
        fftw_execute(plan);
        std::memcpy(data.data(), buf_, n_ * sizeof(fftw_complex));
        if (scale != 1.0)
            for (auto& v : data) v *= scale;
    }

    std::size_t n_;
    fftw_complex* buf_;
    fftw_plan fwd_, inv_;
};

struct LinkConfig {
    double length_km = 1000.0;
    double step_km = 0.1;
    double beta2_s2_per_m = -21.7e-27;   // -21.7 ps^2/km
    double gamma_nl_per_w_m = 1.27e-3;   // 1.27 /W/km
    double alpha_db_per_km = 0.2;        // compensated by ideal distributed Raman gain
    double ase_psd_w_per_hz = 0.0;       // total over the link
    double symbol_rate_hz = 50e9;
    int n_wdm_channels = 5;
    double channel_spacing_hz = 50e9;
    int oversampling = 8;                // samples per symbol, power of two

    double sample_rate_hz() const { return symbol_rate_hz * oversampling; }
    std::size_t n_steps() const {
        return static_cast<std::size_t>(std::ceil(length_km / step_km - 1e-12));
    }
};

inline void validate(const LinkConfig& cfg) {
    if (!(cfg.length_km > 0.0) || !(cfg.step_km > 0.0))
        throw std::invalid_argument("LinkConfig: length_km and step_km must be > 0");
    if (cfg.n_wdm_channels < 1 || cfg.n_wdm_channels % 2 == 0)
        throw std::invalid_argument("LinkConfig: n_wdm_channels must be odd and positive");
    if (cfg.oversampling < 2 || (cfg.oversampling & (cfg.oversampling - 1)) != 0)
        throw std::invalid_argument("LinkConfig: oversampling must be a power of two >= 2");
    if (cfg.ase_psd_w_per_hz < 0.0 || cfg.channel_spacing_hz < 0.0 || cfg.symbol_rate_hz <= 0.0)
        throw std::invalid_argument("LinkConfig: nonnegative physics parameters required");
    if (cfg.sample_rate_hz() <
        static_cast<double>(cfg.n_wdm_channels) * cfg.channel_spacing_hz - 1e-3)
        throw std::invalid_argument(
            "LinkConfig: simulation bandwidth does not cover the WDM spectrum");
}

struct SampledSignal {
    std::vector<std::complex<double>> samples;
    double sample_rate_hz = 0.0;
    double center_freq_offset_hz = 0.0;
};

// Ideal band-limited (sinc) interpolation: brick-wall spectrum of width
// symbol_rate, circular boundary convention. Preserves symbol values at
// sample instants k*oversampling and the average power of the symbol train.
inline SampledSignal shape_pulses(const SymbolSequence& x, int oversampling,
                                  double symbol_rate_hz) {
    if (oversampling < 2) throw std::invalid_argument("shape_pulses: oversampling must be >= 2");
    const std::size_t n = x.size();
    const std::size_t big = n * static_cast<std::size_t>(oversampling);

    std::vector<std::complex<double>> spec(x.values);
    Fft fft_small(n);
    fft_small.forward(spec);

    std::vector<std::complex<double>> full(big, {0.0, 0.0});
    const double scale = static_cast<double>(oversampling);
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < n; ++k) {
        // map symbol-grid bin k to the same physical frequency on the dense grid
        const std::size_t dst = (k < half || n == 1) ? k : big - (n - k);
        full[dst] = spec[k] * scale;
    }
    Fft fft_big(big);
    fft_big.inverse(full);

    SampledSignal out;
    out.samples = std::move(full);
    out.sample_rate_hz = symbol_rate_hz * oversampling;
    out.center_freq_offset_hz = 0.0;
    return out;
}

namespace detail {

inline std::vector<double> angular_freq_grid(std::size_t n, double sample_rate_hz) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double idx = (k <= n / 2) ? static_cast<double>(k)
                                        : static_cast<double>(k) - static_cast<double>(n);
        w[k] = kTwoPi * idx * sample_rate_hz / static_cast<double>(n);
    }
    return w;
}

// One symmetric split step: linear half, full nonlinear, linear half.
// half_lin holds exp(j beta2/2 w^2 dz/2) per bin.
inline void split_step(std::vector<std::complex<double>>& u, Fft& fft,
                       const std::vector<std::complex<double>>& half_lin, double gamma_dz) {
    fft.forward(u);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] *= half_lin[k];
    fft.inverse(u);
    if (gamma_dz != 0.0)
        for (auto& v : u) v *= std::polar(1.0, gamma_dz * std::norm(v));
    fft.forward(u);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] *= half_lin[k];
    fft.inverse(u);
}

inline void run_ssfm(std::vector<std::complex<double>>& u, const LinkConfig& cfg, double beta2,
                     double gamma_nl, double ase_psd, std::uint64_t seed) {
    const std::size_t n = u.size();
    const std::size_t steps = cfg.n_steps();
    const double dz_m = cfg.length_km * 1000.0 / static_cast<double>(steps);
    Fft fft(n);
    const auto w = angular_freq_grid(n, cfg.sample_rate_hz());
    std::vector<std::complex<double>> half_lin(n);
    for (std::size_t k = 0; k < n; ++k)
        half_lin[k] = std::polar(1.0, 0.5 * beta2 * w[k] * w[k] * 0.5 * dz_m);

    Rng rng(seed);
    const double step_noise_var =
        ase_psd * cfg.sample_rate_hz() / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        split_step(u, fft, half_lin, gamma_nl * dz_m);
        if (step_noise_var > 0.0)
            for (auto& v : u) v += rng.circular_gaussian(step_noise_var);
    }
}

}  // namespace detail

// Sum the WDM channels at their frequency offsets and co-propagate the
// aggregate through the NLSE by symmetric split-step Fourier. Loss is exactly
// canceled by ideal distributed gain; distributed ASE is injected per step.
inline SampledSignal propagate(const LinkConfig& cfg, const std::vector<SampledSignal>& tx,
                               std::uint64_t seed) {
    validate(cfg);
    if (tx.size() != static_cast<std::size_t>(cfg.n_wdm_channels))
        throw std::invalid_argument("propagate: need one tx signal per WDM channel");
    const std::size_t n = tx.front().samples.size();
    for (const auto& ch : tx)
        if (ch.samples.size() != n) throw std::invalid_argument("propagate: length mismatch");

    const int center = cfg.n_wdm_channels / 2;
    std::vector<std::complex<double>> u(n, {0.0, 0.0});
    for (int c = 0; c < cfg.n_wdm_channels; ++c) {
        const double f_off = static_cast<double>(c - center) * cfg.channel_spacing_hz;
        const double dphi = kTwoPi * f_off / cfg.sample_rate_hz();
        std::complex<double> ph{1.0, 0.0};
        const std::complex<double> rot = std::polar(1.0, dphi);
        for (std::size_t m = 0; m < n; ++m) {
            u[m] += tx[static_cast<std::size_t>(c)].samples[m] * ph;
            ph *= rot;
        }
    }

    detail::run_ssfm(u, cfg, cfg.beta2_s2_per_m, cfg.gamma_nl_per_w_m, cfg.ase_psd_w_per_hz,
                     seed);

    SampledSignal out;
    out.samples = std::move(u);
    out.sample_rate_hz = cfg.sample_rate_hz();
    out.center_freq_offset_hz = 0.0;
    return out;
}

// Receiver front end: brick-wall bandpass to the center channel, single-channel
// DBP on the same step grid with negated beta2 and gamma, matched sinc filter,
// downsample to symbol rate.
inline std::vector<std::complex<double>> receive(const LinkConfig& cfg,
                                                 const SampledSignal& rx) {
    validate(cfg);
    const std::size_t big = rx.samples.size();
    const std::size_t os = static_cast<std::size_t>(cfg.oversampling);
    if (big % os != 0) throw std::invalid_argument("receive: sample count not a symbol multiple");
    const std::size_t n = big / os;

    auto bandpass = [&](std::vector<std::complex<double>>& u) {
        Fft fft(big);
        fft.forward(u);
        const std::size_t keep_lo = n / 2;           // bins [0, n/2) and [big - n + n/2, big)
        for (std::size_t k = 0; k < big; ++k) {
            const bool in_band = k < keep_lo || k >= big - (n - keep_lo);
            if (!in_band) u[k] = {0.0, 0.0};
        }
        fft.inverse(u);
    };

    std::vector<std::complex<double>> u = rx.samples;
    bandpass(u);
    detail::run_ssfm(u, cfg, -cfg.beta2_s2_per_m, -cfg.gamma_nl_per_w_m, 0.0, 0);
    bandpass(u);  // matched sinc filter

    std::vector<std::complex<double>> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = u[k * os];
    return y;
}

}  // namespace sicfiber
