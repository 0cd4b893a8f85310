#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sgl/noise.hpp"

using namespace sgl;

TEST_CASE("default spectrum") {
    const NoiseSpectrum s = NoiseSpectrum::degenerate_default(32);
    CHECK(s.n_modes() == 32);
    for (int k = 0; k <= 3; ++k) CHECK(s.q[static_cast<std::size_t>(k)] == 0.0);
    CHECK(s.q[4] == doctest::Approx(std::pow(4.0, -4.0)));
    CHECK_FALSE(validate(s).has_value());
}

TEST_CASE("spectrum violations name the bound") {
    NoiseSpectrum s = NoiseSpectrum::degenerate_default(8);
    s.beta = 2.5;
    auto v = validate(s);
    REQUIRE(v);
    CHECK(v->bound == "beta_window");
    CHECK(v->limit == 2.0);
    CHECK(v->to_text().find("violation = beta_window") != std::string::npos);

    s.beta = 1.8;
    v = validate(s);
    REQUIRE(v);
    CHECK(v->bound == "beta_window");
    CHECK(v->limit == doctest::Approx(1.875));

    s = NoiseSpectrum::degenerate_default(8);
    s.alpha = 1.5;
    s.beta = 1.5;
    CHECK(validate(s)->bound == "alpha_min");

    s = NoiseSpectrum::degenerate_default(8);
    s.q[6] = 1e-9;
    v = validate(s);
    REQUIRE(v);
    CHECK(v->bound == "lower_bound");
    CHECK(v->k == 6);

    s = NoiseSpectrum::degenerate_default(8);
    s.q[5] = 1.0;
    CHECK(validate(s)->bound == "upper_bound");

    // Modes at or below k_star are free.
    s = NoiseSpectrum::degenerate_default(8);
    s.q[2] = 5.0;
    CHECK_FALSE(validate(s).has_value());

    s.q[1] = -1.0;
    CHECK(validate(s)->bound == "q_nonnegative");
}

TEST_CASE("step variance formula") {
    const double l = mode_eigenvalue(5);
    CHECK(convolution_step_variance(0.1, 5, 0.01) ==
          doctest::Approx(0.01 * (1.0 - std::exp(-2.0 * l * 0.01)) / (2.0 * l)).epsilon(1e-14));
    // Long steps reach the stationary variance q^2 / (2 l).
    CHECK(convolution_step_variance(0.1, 5, 100.0) == doctest::Approx(0.01 / (2.0 * l)));
    CHECK(convolution_step_variance(0.0, 5, 0.01) == 0.0);
    // Tiny steps keep full relative precision.
    CHECK(convolution_step_variance(1.0, 1, 1e-12) == doctest::Approx(1e-12).epsilon(1e-9));
}

TEST_CASE("increments: exact zeros, variance, independence, determinism") {
    const NoiseSpectrum spec = NoiseSpectrum::degenerate_default(8);
    const double h = 1.0 / 64.0;
    const ConvolutionStepSampler sampler(spec, h);
    CHECK_THROWS_AS(ConvolutionStepSampler(spec, 0.0), std::invalid_argument);

    const int n = 20000;
    const std::size_t slots = 17;
    std::vector<double> sum(slots, 0.0), sum_sq(slots, 0.0);
    double cross = 0.0;  // slots 7 and 8 (a_4, b_4)
    double cross_modes = 0.0;  // slots 7 and 9 (a_4, a_5)
    std::vector<double> out(slots);
    for (int i = 0; i < n; ++i) {
        sampler.sample(StreamKey(1, static_cast<std::uint64_t>(i)), 3, out);
        for (std::size_t s = 0; s < slots; ++s) {
            sum[s] += out[s];
            sum_sq[s] += out[s] * out[s];
        }
        cross += out[7] * out[8] / (sampler.step_stddev(4) * sampler.step_stddev(4));
        cross_modes += out[7] * out[9] / (sampler.step_stddev(4) * sampler.step_stddev(5));
    }
    for (std::size_t s = 0; s < 7; ++s) CHECK(sum_sq[s] == 0.0);
    for (std::size_t s = 7; s < slots; ++s) {
        const int k = SpectralField::mode_of_slot(s);
        const double var = convolution_step_variance(spec.q[static_cast<std::size_t>(k)], k, h);
        const double est = sum_sq[s] / n;
        // Var of a chi-square estimate: 2 var^2 / n.
        CHECK(std::abs(est - var) < 4.0 * var * std::sqrt(2.0 / n));
        CHECK(std::abs(sum[s] / n) < 4.0 * std::sqrt(var / n));
    }
    CHECK(std::abs(cross / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(cross_modes / n) < 4.0 / std::sqrt(n));

    const SpectralField a = sampler.sample(StreamKey(5, 5), 9);
    const SpectralField b = sampler.sample(StreamKey(5, 5), 9);
    const SpectralField c = sampler.sample(StreamKey(5, 5), 10);
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("advance applies the exact decay") {
    const NoiseSpectrum spec = NoiseSpectrum::degenerate_default(4);
    const ConvolutionStepSampler sampler(spec, 0.1);
    SpectralField w = SpectralField::basis(4, 2);
    std::vector<double> zero(9, 0.0);
    sampler.advance(w, zero);
    CHECK(w.a(2) == doctest::Approx(std::exp(-mode_eigenvalue(2) * 0.1)).epsilon(1e-15));
}

TEST_CASE("sup of the stochastic convolution") {
    const NoiseSpectrum spec = NoiseSpectrum::degenerate_default(8);
    const auto e1 = sup_gaussian_check(spec, 0.25, 2.0, 200, 3);
    const auto e2 = sup_gaussian_check(spec, 0.5, 2.0, 200, 3);
    CHECK(e1.mean > 0.0);
    CHECK(std::isfinite(e1.mean));
    CHECK(e1.ci_low <= e1.mean);
    CHECK(e1.mean <= e1.ci_high);
    // Same paths on a longer window: the sup can only grow.
    CHECK(e2.mean >= e1.mean);
    // The convolution is linear in Q^{1/2}.
    NoiseSpectrum twice = spec;
    for (double& q : twice.q) q *= 2.0;
    const auto e3 = sup_gaussian_check(twice, 0.25, 2.0, 200, 3);
    CHECK(e3.mean == doctest::Approx(4.0 * e1.mean).epsilon(1e-12));
    CHECK(sup_gaussian_check(spec, 0.25, 2.0, 200, 3).mean == e1.mean);
    CHECK_THROWS_AS(sup_gaussian_check(spec, 0.25, 0.5, 200, 3), std::invalid_argument);
}
