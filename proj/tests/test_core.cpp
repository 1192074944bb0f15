#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "sicfiber/constellation.hpp"
#include "sicfiber/cpan.hpp"
#include "sicfiber/math_util.hpp"
#include "sicfiber/rng.hpp"

using namespace sicfiber;

TEST_CASE("wrap_phase maps to [-pi, pi)") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(kPi) == Catch::Approx(-kPi));
    CHECK(wrap_phase(3.0 * kPi / 2.0) == Catch::Approx(-kPi / 2.0));

    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const double x = (rng.uniform() - 0.5) * 200.0;
        const double w = wrap_phase(x);
        REQUIRE(w >= -kPi);
        REQUIRE(w < kPi);
        const double diff = std::remainder(x - w, kTwoPi);
        REQUIRE(std::abs(diff) < 1e-9);
    }
}

TEST_CASE("log_bessel_i0 agrees with reference values and across the branch switch") {
    // small arguments against std::cyl_bessel_i
    for (double z : {0.0, 0.1, 1.0, 5.0, 12.0, 19.0}) {
        const double ref = std::log(std::cyl_bessel_i(0.0, z));
        CHECK(log_bessel_i0(z) == Catch::Approx(ref).margin(1e-12));
    }
    // branch agreement near the switch point
    for (double z : {19.5, 19.9, 19.99, 20.01, 20.5, 21.0}) {
        const double ref = std::log(std::cyl_bessel_i(0.0, z));
        CHECK(log_bessel_i0(z) == Catch::Approx(ref).epsilon(1e-10));
    }
    // large arguments stay finite where linear-domain I0 overflows
    CHECK(std::isfinite(log_bessel_i0(5000.0)));
    CHECK(log_bessel_i0(1000.0) ==
          Catch::Approx(1000.0 - 0.5 * std::log(kTwoPi * 1000.0)).epsilon(1e-3));
}

TEST_CASE("build_star_qam basic shapes") {
    SECTION("full-scale constellation has 4096 points") {
        const auto c = build_star_qam(32, 128, 1e-3, 3.2);
        CHECK(c.size() == 4096);
        CHECK(c.n_rings() == 32);
    }
    SECTION("single ring collapses to QPSK on the unit circle") {
        const auto c = build_star_qam(1, 4, 1.0, 1.0);
        REQUIRE(c.radii.size() == 1);
        CHECK(c.radii[0] == Catch::Approx(1.0));
        CHECK(c.radial_pmf[0] == Catch::Approx(1.0));
        REQUIRE(c.phase_set.size() == 4);
        CHECK(c.phase_set[1] == Catch::Approx(kPi / 2.0));
        CHECK(c.phase_set[3] == Catch::Approx(3.0 * kPi / 2.0));
    }
    SECTION("two-ring PMF matches hand evaluation of r*exp(-r^2)") {
        const auto c = build_star_qam(2, 1, 1.0, 1.0);
        // pre-scaling weights at r in {0.5, 1}: {0.5 e^{-0.25}, e^{-1}}
        const double w0 = 0.5 * std::exp(-0.25), w1 = std::exp(-1.0);
        CHECK(c.radial_pmf[0] == Catch::Approx(w0 / (w0 + w1)).epsilon(1e-12));
        CHECK(c.radial_pmf[1] == Catch::Approx(w1 / (w0 + w1)).epsilon(1e-12));
    }
    SECTION("invalid arguments rejected") {
        CHECK_THROWS_AS(build_star_qam(0, 4, 1.0, 3.2), std::invalid_argument);
        CHECK_THROWS_AS(build_star_qam(4, 0, 1.0, 3.2), std::invalid_argument);
        CHECK_THROWS_AS(build_star_qam(4, 4, -1.0, 3.2), std::invalid_argument);
        CHECK_THROWS_AS(build_star_qam(4, 4, 1.0, 0.0), std::invalid_argument);
        // extreme truncation drives ring weights to exact zero
        CHECK_THROWS_AS(build_star_qam(64, 4, 1.0, 60.0), std::invalid_argument);
    }
}

TEST_CASE("constellation invariants hold across configurations") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const int n_rings = 1 + static_cast<int>(rng.uniform() * 64);
        const int n_p = 1 + static_cast<int>(rng.uniform() * 128);
        const double ptx = std::pow(10.0, (rng.uniform() - 0.5) * 6.0);
        const double trunc = 1.0 + rng.uniform() * 3.0;
        const auto c = build_star_qam(n_rings, n_p, ptx, trunc);

        double psum = 0.0;
        for (double p : c.radial_pmf) {
            REQUIRE(p > 0.0);
            psum += p;
        }
        CHECK(psum == Catch::Approx(1.0).margin(1e-12));
        for (std::size_t k = 1; k < c.radii.size(); ++k) REQUIRE(c.radii[k] > c.radii[k - 1]);
        CHECK(c.average_power() == Catch::Approx(ptx).epsilon(1e-9));
        // phase set equally spaced from 0
        for (int j = 0; j < c.n_p; ++j)
            REQUIRE(c.phase_set[j] == Catch::Approx(kTwoPi * j / c.n_p).margin(1e-12));
    }
}

TEST_CASE("phase symmetry: rotation by 2pi/n_p permutes the point multiset") {
    const auto c = build_star_qam(4, 8, 1.0, 3.0);
    const auto rot = std::polar(1.0, kTwoPi / c.n_p);
    for (std::size_t k = 0; k < c.n_rings(); ++k)
        for (int j = 0; j < c.n_p; ++j) {
            const auto p = c.point(k, j) * rot;
            const auto q = c.point(k, (j + 1) % c.n_p);
            REQUIRE(std::abs(p - q) < 1e-12);
        }
}

TEST_CASE("source_entropy") {
    const auto c = build_star_qam(1, 128, 1.0, 1.0);
    CHECK(source_entropy(c).h_phase_bits == Catch::Approx(7.0));
    CHECK(source_entropy(c).h_radius_bits == Catch::Approx(0.0).margin(1e-15));

    Constellation fair;
    fair.radii = {0.5, 1.5};
    fair.radial_pmf = {0.5, 0.5};
    fair.n_p = 1;
    fair.phase_set = {0.0};
    CHECK(source_entropy(fair).h_radius_bits == Catch::Approx(1.0));

    // entropy grows with ring count at fixed ptx and truncation
    const auto c32 = build_star_qam(32, 4, 1.0, 3.2);
    const auto c64 = build_star_qam(64, 4, 1.0, 3.2);
    CHECK(source_entropy(c64).h_radius_bits > source_entropy(c32).h_radius_bits);
}

TEST_CASE("sample_sequence") {
    const auto c = build_star_qam(2, 1, 1.0, 1.0);
    SECTION("n_p = 1 pins every phase index") {
        const auto s = sample_sequence(c, 500, 3);
        for (int p : s.phase_idx) REQUIRE(p == 0);
    }
    SECTION("same seed gives identical sequences") {
        const auto a = sample_sequence(c, 1000, 99);
        const auto b = sample_sequence(c, 1000, 99);
        REQUIRE(a.radius_idx == b.radius_idx);
        REQUIRE(a.phase_idx == b.phase_idx);
        REQUIRE(a.values == b.values);
    }
    SECTION("values match the indexed constellation point exactly") {
        const auto c2 = build_star_qam(4, 8, 2.0, 3.0);
        const auto s = sample_sequence(c2, 200, 5);
        for (std::size_t i = 0; i < s.size(); ++i)
            REQUIRE(s.values[i] == c2.point(s.radius_idx[i], s.phase_idx[i]));
    }
    SECTION("empirical radius frequencies within 3 binomial sigma over 1e6 draws") {
        const std::size_t n = 1000000;
        const auto s = sample_sequence(c, n, 12345);
        std::vector<std::size_t> counts(2, 0);
        for (int r : s.radius_idx) ++counts[static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k < 2; ++k) {
            const double p = c.radial_pmf[k];
            const double sigma = std::sqrt(n * p * (1.0 - p));
            REQUIRE(std::abs(static_cast<double>(counts[k]) - n * p) < 3.0 * sigma);
        }
    }
}

TEST_CASE("steady_state_variance") {
    CHECK(steady_state_variance(0.0, 0.5) == Catch::Approx(0.5));
    CHECK(steady_state_variance(0.5, 0.75) == Catch::Approx(1.0));
    CHECK(steady_state_variance(0.99, 1e-4) == Catch::Approx(5.0251e-3).epsilon(1e-4));
    CHECK_THROWS_AS(steady_state_variance(1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(steady_state_variance(-1.2, 0.1), std::invalid_argument);
}

TEST_CASE("cpan params validation") {
    auto p = make_cpan_params(0.9, 0.01, 0.001);
    CHECK_NOTHROW(validate(p));
    p.sigma_delta_sq *= 1.5;  // break the steady-state relation
    CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("cpan simulate") {
    const auto c = build_star_qam(4, 8, 1.0, 3.0);
    const auto x = sample_sequence(c, 4096, 21);

    SECTION("noiseless channel is the identity") {
        const auto p = make_cpan_params(0.5, 0.0, 0.0);
        const auto out = simulate(p, x, 9);
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(out.y[i] == x.values[i]);
    }
    SECTION("deterministic given seed") {
        const auto p = make_cpan_params(0.9, 0.01, 0.001);
        const auto a = simulate(p, x, 33);
        const auto b = simulate(p, x, 33);
        REQUIRE(a.y == b.y);
        REQUIRE(a.theta == b.theta);
    }
    SECTION("mu_delta = 0 gives a white phase process") {
        const auto xl = sample_sequence(c, 1000000, 1);
        const auto p = make_cpan_params(0.0, 0.01, 0.0);
        const auto out = simulate(p, xl, 77);
        double c1 = 0.0;
        for (std::size_t i = 0; i + 1 < out.theta.size(); ++i)
            c1 += out.theta[i] * out.theta[i + 1];
        c1 /= static_cast<double>(out.theta.size() - 1);
        // under whiteness, lag-1 sample autocovariance has std ~ var/sqrt(n)
        const double sigma = p.sigma_theta_sq / std::sqrt(static_cast<double>(out.theta.size()));
        REQUIRE(std::abs(c1) < 3.0 * sigma);
    }
    SECTION("steady-state variance reached for mu_delta = 0.99") {
        const auto xl = sample_sequence(c, 1000000, 2);
        CpanParams p;
        p.mu_delta = 0.99;
        p.sigma_delta_sq = 1e-4;
        p.sigma_theta_sq = steady_state_variance(0.99, 1e-4);
        p.sigma_n_sq = 0.0;
        const auto out = simulate(p, xl, 5);
        double var = 0.0;
        for (double t : out.theta) var += t * t;
        var /= static_cast<double>(out.theta.size());
        REQUIRE(var == Catch::Approx(p.sigma_theta_sq).epsilon(0.05));
    }
}

TEST_CASE("sigma_theta -> 0 reduces to memoryless AWGN (grid total variation)") {
    const auto c = build_star_qam(1, 1, 1.0, 1.0);  // fixed symbol at radius 1
    const auto x = sample_sequence(c, 200000, 3);
    const auto p = make_cpan_params(0.9, 0.0, 0.04);
    const auto sim = simulate(p, x, 8);

    // reference AWGN draw with the same additive variance
    Rng rng(4242);
    const int bins = 8;
    const double span = 3.0 * std::sqrt(0.02);
    std::vector<double> ha(bins * bins, 0.0), hb(bins * bins, 0.0);
    auto bin_of = [&](std::complex<double> d) {
        int bx = static_cast<int>((d.real() + span) / (2.0 * span) * bins);
        int by = static_cast<int>((d.imag() + span) / (2.0 * span) * bins);
        bx = std::clamp(bx, 0, bins - 1);
        by = std::clamp(by, 0, bins - 1);
        return bx * bins + by;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        ha[bin_of(sim.y[i] - x.values[i])] += 1.0;
        hb[bin_of(rng.circular_gaussian(0.04))] += 1.0;
    }
    double tv = 0.0;
    for (int b = 0; b < bins * bins; ++b)
        tv += std::abs(ha[b] - hb[b]) / static_cast<double>(x.size());
    tv *= 0.5;
    // Monte Carlo noise floor for 64 bins at n = 2e5 is ~ sqrt(bins)/sqrt(n) ~ 0.013
    REQUIRE(tv < 0.02);
}

TEST_CASE("fit_params") {
    const auto c = build_star_qam(8, 16, 1.0, 3.2);

    SECTION("noiseless input recovers the exact phase track") {
        const auto x = sample_sequence(c, 8192, 17);
        const auto p = make_cpan_params(0.95, 0.01, 0.0);
        const auto sim = simulate(p, x, 3);
        std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>> train;
        train.emplace_back(x, sim.y);
        const auto fit = fit_params(train);
        CHECK(fit.params.sigma_n_sq < 1e-12);
        CHECK(fit.params.mu_delta == Catch::Approx(0.95).epsilon(0.05));
        CHECK(fit.params.sigma_theta_sq == Catch::Approx(0.01).epsilon(0.15));
    }
    SECTION("constant input is reported degenerate") {
        SymbolSequence x;
        for (int i = 0; i < 64; ++i) {
            x.radius_idx.push_back(0);
            x.phase_idx.push_back(0);
            x.values.emplace_back(1.0, 0.0);
        }
        std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>> train;
        train.emplace_back(x, x.values);
        const auto fit = fit_params(train);
        CHECK(fit.degenerate);
        CHECK(fit.params.sigma_theta_sq == 0.0);
        CHECK(fit.params.sigma_n_sq < 1e-12);
        CHECK(fit.params.mu_delta >= 0.0);
        CHECK(fit.params.mu_delta < 1.0);
    }
    SECTION("errors") {
        std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>> empty;
        CHECK_THROWS_AS(fit_params(empty), std::invalid_argument);
        SymbolSequence x;
        x.radius_idx = {0};
        x.phase_idx = {0};
        x.values = {{0.0, 0.0}};
        std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>> bad;
        bad.emplace_back(x, x.values);
        CHECK_THROWS_AS(fit_params(bad), std::invalid_argument);
    }
    SECTION("closed loop recovers parameters within 10% (3 seeds)") {
        const auto truth = make_cpan_params(0.97, 0.01, 0.01);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            std::vector<std::pair<SymbolSequence, std::vector<std::complex<double>>>> train;
            for (int s = 0; s < 24; ++s) {
                auto x = sample_sequence(c, 8192, derive_seed(seed, 100, s));
                auto sim = simulate(truth, x, derive_seed(seed, 200, s));
                train.emplace_back(std::move(x), std::move(sim.y));
            }
            const auto fit = fit_params(train);
            CHECK(fit.params.mu_delta == Catch::Approx(0.97).epsilon(0.10));
            CHECK(fit.params.sigma_theta_sq == Catch::Approx(0.01).epsilon(0.10));
            CHECK(fit.params.sigma_n_sq == Catch::Approx(0.01).epsilon(0.10));
        }
    }
}
