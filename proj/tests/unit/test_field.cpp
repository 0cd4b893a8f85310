#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "sgl/field.hpp"

using namespace sgl;
using std::numbers::pi;

namespace {

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// H-norm of a periodic grid function: sqrt(int f^2 + int f'^2), derivative by
// fourth-order central differences.
double fd_h_norm(const std::vector<double>& f) {
    const int m = static_cast<int>(f.size());
    const double dx = 1.0 / m;
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
        auto at = [&](int o) { return f[static_cast<std::size_t>((j + o + m) % m)]; };
        const double d = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx);
        s += (f[static_cast<std::size_t>(j)] * f[static_cast<std::size_t>(j)] + d * d) * dx;
    }
    return std::sqrt(s);
}

// L f = f - f'' with fourth-order differences.
std::vector<double> fd_apply_l(const std::vector<double>& f) {
    const int m = static_cast<int>(f.size());
    const double dx = 1.0 / m;
    std::vector<double> out(f.size());
    for (int j = 0; j < m; ++j) {
        auto at = [&](int o) { return f[static_cast<std::size_t>((j + o + m) % m)]; };
        const double d2 = (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * dx * dx);
        out[static_cast<std::size_t>(j)] = at(0) - d2;
    }
    return out;
}

}  // namespace

TEST_CASE("eigenvalues") {
    CHECK(mode_eigenvalue(0) == 1.0);
    CHECK(mode_eigenvalue(1) == doctest::Approx(1.0 + 4.0 * pi * pi).epsilon(1e-15));
    CHECK(mode_eigenvalue(7) == doctest::Approx(1.0 + 196.0 * pi * pi).epsilon(1e-15));
}

TEST_CASE("field construction") {
    CHECK_THROWS_AS(SpectralField(4, std::vector<double>(3)), std::invalid_argument);
    CHECK_THROWS_AS(SpectralField(0), std::invalid_argument);
    const SpectralField u = SpectralField::cosine(4, 2, 3.0);
    CHECK(u.a(2) == doctest::Approx(3.0 * std::sqrt(mode_eigenvalue(2) / 2.0)));
    CHECK(SpectralField::mode_of_slot(0) == 0);
    CHECK(SpectralField::mode_of_slot(3) == 2);
    CHECK(SpectralField::mode_of_slot(4) == 2);
    CHECK_THROWS_AS(SpectralField(3) + SpectralField(4), std::invalid_argument);
}

TEST_CASE("drift polynomial validation") {
    CHECK_NOTHROW(DriftPolynomial({0.0, -1.0, 0.0, 1.0, 0.0, 0.0}));
    CHECK(DriftPolynomial({0.0, -1.0, 0.0, 1.0, 0.0}).degree() == 3);
    CHECK_THROWS_AS(DriftPolynomial({0.0, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DriftPolynomial({0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DriftPolynomial({0.0, 0.0, 0.0, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DriftPolynomial({0.0, 0.0, 0.0, -1.0}), std::invalid_argument);
    const auto gl = DriftPolynomial::ginzburg_landau();
    CHECK(gl(2.0) == 6.0);
    CHECK(gl(-0.5) == doctest::Approx(0.375));
}

TEST_CASE("norms of basis vectors") {
    for (int k = 0; k <= 5; ++k) {
        const SpectralField e = SpectralField::basis(6, k);
        CHECK(norm_gamma(e, 0.0) == doctest::Approx(1.0));
        CHECK(norm_gamma(e, 1.0) == doctest::Approx(mode_eigenvalue(k)));
        CHECK(norm_gamma(e, 0.5) == doctest::Approx(std::sqrt(mode_eigenvalue(k))));
    }
}

TEST_CASE("||e_1||_1 against a finite-difference oracle") {
    // ||u||_1 = ||L u||_H. Build e_1 on a grid, apply L and the H-norm by finite
    // differences at two resolutions and Richardson-extrapolate the O(dx^4) error.
    auto estimate = [](int m) {
        std::vector<double> f(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j)
            f[static_cast<std::size_t>(j)] = std::sqrt(2.0 / mode_eigenvalue(1)) * std::cos(2.0 * pi * j / m);
        return fd_h_norm(fd_apply_l(f));
    };
    const double coarse = estimate(64), fine = estimate(128);
    const double extrapolated = (16.0 * fine - coarse) / 15.0;
    const double expected = 1.0 + 4.0 * pi * pi;
    CHECK(std::abs(extrapolated - expected) / expected < 1e-7);
    CHECK(norm_gamma(SpectralField::basis(4, 1), 1.0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("H-norm matches the physical Sobolev norm (Parseval)") {
    gen::Rng r(11);
    for (int trial = 0; trial < 20; ++trial) {
        const SpectralField u = gen::field(r, 5);
        // Exact quadrature: spectral derivative of the grid values through coefficients.
        const int m = 64;
        const GridField g = to_grid(u, m);
        double l2 = 0.0;
        for (double v : g.values) l2 += v * v / m;
        double d2 = 0.0;
        for (int j = 0; j < m; ++j) {
            double d = 0.0;
            for (int k = 1; k <= 5; ++k) {
                const double s = std::sqrt(2.0 / mode_eigenvalue(k)) * 2.0 * pi * k;
                d += s * (-u.a(k) * std::sin(2.0 * pi * k * j / m) + u.b(k) * std::cos(2.0 * pi * k * j / m));
            }
            d2 += d * d / m;
        }
        CHECK(norm_gamma(u, 0.0) == doctest::Approx(std::sqrt(l2 + d2)).epsilon(1e-12));
        CHECK(fd_h_norm(to_grid(u, 1024).values) == doctest::Approx(norm_gamma(u, 0.0)).epsilon(1e-5));
    }
}

TEST_CASE("semigroup") {
    gen::Rng r(3);
    const SpectralField u = gen::field(r, 8);
    CHECK_THROWS_AS(apply_semigroup(u, -0.1), std::invalid_argument);
    CHECK(apply_semigroup(u, 0.0) == u);
    CHECK(max_abs_diff(apply_semigroup(apply_semigroup(u, 0.013), 0.02), apply_semigroup(u, 0.033)) < 1e-15);
    double prev = norm_gamma(u, 1.0);
    for (double t = 0.001; t < 0.2; t *= 1.7) {
        const double now = norm_gamma(apply_semigroup(u, t), 1.0);
        CHECK(now <= prev);
        prev = now;
    }
    for (double gamma : {0.0, 0.5, 1.0})
        for (double sigma : {0.0, 0.25, 1.0, 2.0})
            for (double t : {1e-4, 0.01, 1.0}) CHECK(smoothing_norm_check(u, t, gamma, sigma));
}

TEST_CASE("semigroup against explicit time stepping of u_t = u_xx - u") {
    gen::Rng r(4);
    const SpectralField u = gen::field(r, 3);
    const int m = 128;
    std::vector<double> f = to_grid(u, m).values;
    const double dx = 1.0 / m, t = 0.01;
    const int steps = 2000;
    const double h = t / steps;
    auto rhs = [&](const std::vector<double>& g) {
        std::vector<double> out = fd_apply_l(g);
        for (double& v : out) v = -v;
        return out;
    };
    (void)dx;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = rhs(f);
        std::vector<double> tmp(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * k1[i];
        const auto k2 = rhs(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + 0.5 * h * k2[i];
        const auto k3 = rhs(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) tmp[i] = f[i] + h * k3[i];
        const auto k4 = rhs(tmp);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    const GridField exact = to_grid(apply_semigroup(u, t), m);
    double err = 0.0, scale = 0.0;
    for (int j = 0; j < m; ++j) {
        err = std::max(err, std::abs(exact.values[static_cast<std::size_t>(j)] - f[static_cast<std::size_t>(j)]));
        scale = std::max(scale, std::abs(exact.values[static_cast<std::size_t>(j)]));
    }
    CHECK(err / scale < 1e-6);
}

TEST_CASE("grid transforms") {
    CHECK_THROWS_AS(TrigTransform(4, 8), std::invalid_argument);
    gen::Rng r(5);
    for (int n : {1, 3, 8, 32}) {
        const SpectralField u = gen::field(r, n);
        for (int m : {2 * n + 1, 2 * n + 2, 4 * n + 1}) {
            const SpectralField back = from_grid(to_grid(u, m), n);
            CHECK(max_abs_diff(u, back) < 1e-12 * (1.0 + norm_gamma(u, 0.0)));
        }
    }
    const GridField g = to_grid(SpectralField::cosine(4, 3, 2.5), 16);
    for (int j = 0; j < 16; ++j)
        CHECK(g.values[static_cast<std::size_t>(j)] == doctest::Approx(2.5 * std::cos(2.0 * pi * 3 * j / 16.0)));
    const GridField s = to_grid(SpectralField::sine(4, 2, -1.0), 16);
    CHECK(s.values[2] == doctest::Approx(-std::sin(2.0 * pi * 2 * 2 / 16.0)));
}

TEST_CASE("dealiased polynomial projection matches an oversampled product") {
    gen::Rng r(6);
    const DriftPolynomial p({0.3, -1.0, 0.5, 2.0, 0.0, 1.0});
    for (int n : {2, 5, 9}) {
        const SpectralField u = gen::field(r, n, 0.2);
        const SpectralField fast = eval_polynomial(p, u);
        // Oracle: grid fine enough to resolve P(u) exactly, then truncate.
        const int big = 2 * p.degree() * n + 7;
        GridField g = to_grid(u, big);
        for (double& v : g.values) v = p(v);
        const SpectralField oracle = from_grid(g, n);
        CHECK(max_abs_diff(fast, oracle) < 1e-12);
    }
    CHECK(dealiased_grid_size(3, 32) == 129);
}

TEST_CASE("a q N + 1 grid aliases the truncated cube") {
    // Products of three modes up to N reach frequency 3N; folding 3N - j back
    // onto j <= N needs M > (q + 1) N, so q N + 1 points are not enough.
    gen::Rng r(7);
    const int n = 6;
    const SpectralField u = gen::field(r, n, 0.3);
    const DriftPolynomial cube({0.0, 0.0, 0.0, 1.0});
    GridField g = to_grid(u, 3 * n + 1);
    for (double& v : g.values) v = cube(v);
    CHECK(max_abs_diff(from_grid(g, n), eval_polynomial(cube, u)) > 1e-6);
}

TEST_CASE("polynomial of a constant field") {
    const SpectralField c = SpectralField::constant(4, 0.7);
    const SpectralField out = eval_polynomial(DriftPolynomial::ginzburg_landau(), c);
    CHECK(out.c0() == doctest::Approx(0.7 * 0.7 * 0.7 - 0.7).epsilon(1e-14));
    for (std::size_t i = 1; i < out.size(); ++i) CHECK(std::abs(out[i]) < 1e-14);
}

TEST_CASE("sup norm") {
    CHECK(sup_norm(SpectralField::cosine(8, 3, -2.0)) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sup_norm(SpectralField::constant(3, -4.0)) == doctest::Approx(4.0));
    const SpectralField u = SpectralField::sine(8, 5, 1.0);
    CHECK(sup_norm(u, 4000) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sup_norm(u) <= 1.0 + 1e-14);
}
