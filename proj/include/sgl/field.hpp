#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sgl {

/// Eigenvalue of L = 1 - d^2/dxi^2 on the k-th trigonometric pair of [0,1) periodic.
double mode_eigenvalue(int k) noexcept;

/// Element of H = W^{1,2}_per([0,1]) truncated to N Fourier pairs.
///
/// Coordinates are taken in the H-orthonormal trigonometric basis
///   e_0 = 1,  e_k^c = sqrt(2/l_k) cos(2 pi k xi),  e_k^s = sqrt(2/l_k) sin(2 pi k xi),
/// stored as [c_0, a_1, b_1, a_2, b_2, ..., a_N, b_N]. With this choice both L and
/// the noise covariance act diagonally, so every norm is a weighted l^2 sum.
class SpectralField {
public:
    explicit SpectralField(int n_modes);
    SpectralField(int n_modes, std::vector<double> coeffs);

    static SpectralField zero(int n_modes) { return SpectralField(n_modes); }
    static SpectralField constant(int n_modes, double value);
    /// Field whose physical-space representation is amplitude * cos(2 pi k xi).
    static SpectralField cosine(int n_modes, int k, double amplitude);
    static SpectralField sine(int n_modes, int k, double amplitude);
    /// Unit coordinate vector: cosine pair (k >= 1), or the constant mode for k = 0.
    static SpectralField basis(int n_modes, int k);

    int n_modes() const noexcept { return n_modes_; }
    std::size_t size() const noexcept { return coeffs_.size(); }

    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> coeffs() noexcept { return coeffs_; }
    double operator[](std::size_t i) const noexcept { return coeffs_[i]; }
    double& operator[](std::size_t i) noexcept { return coeffs_[i]; }

    double c0() const noexcept { return coeffs_[0]; }
    double a(int k) const noexcept { return coeffs_[2 * k - 1]; }
    double b(int k) const noexcept { return coeffs_[2 * k]; }

    /// Mode index k of storage slot i.
    static int mode_of_slot(std::size_t i) noexcept { return static_cast<int>((i + 1) / 2); }

    bool is_finite() const noexcept;

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s) noexcept;

    friend SpectralField operator+(SpectralField lhs, const SpectralField& rhs) { return lhs += rhs; }
    friend SpectralField operator-(SpectralField lhs, const SpectralField& rhs) { return lhs -= rhs; }
    friend SpectralField operator*(double s, SpectralField f) { return f *= s; }
    friend bool operator==(const SpectralField&, const SpectralField&) = default;

private:
    int n_modes_;
    std::vector<double> coeffs_;
};

/// Uniform samples of u at xi_j = j / M, j = 0..M-1.
struct GridField {
    std::vector<double> values;

    std::size_t n_points() const noexcept { return values.size(); }
};

/// Polynomial drift P with odd degree q >= 3 and positive leading coefficient.
class DriftPolynomial {
public:
    /// Coefficients p_0..p_q in increasing degree. Trailing zeros are stripped
    /// before the degree is checked.
    explicit DriftPolynomial(std::vector<double> coefficients);

    /// P(u) = u^3 - u.
    static DriftPolynomial ginzburg_landau();

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    std::span<const double> coefficients() const noexcept { return coeffs_; }

    double operator()(double u) const noexcept;

private:
    std::vector<double> coeffs_;
};

double norm_gamma(const SpectralField& u, double gamma);

/// e^{-Lt} u. Throws std::invalid_argument for t < 0.
SpectralField apply_semigroup(const SpectralField& u, double t);

/// Evaluates ||e^{-Lt}u||_{gamma+sigma} <= t^{-sigma} ||u||_gamma.
bool smoothing_norm_check(const SpectralField& u, double t, double gamma, double sigma);

/// Cached synthesis/analysis tables for a fixed (N, M). Direct O(MN) sums;
/// M here is at most a few hundred so this beats an FFT plan on setup cost
/// and keeps results independent of any external library's rounding.
class TrigTransform {
public:
    /// Throws std::invalid_argument unless M >= 2N + 1.
    TrigTransform(int n_modes, int n_points);

    int n_modes() const noexcept { return n_modes_; }
    int n_points() const noexcept { return n_points_; }

    void synthesize(std::span<const double> coeffs, std::span<double> values) const;
    void analyze(std::span<const double> values, std::span<double> coeffs) const;

private:
    int n_modes_;
    int n_points_;
    // cos_/sin_ hold sqrt(2/l_k) cos(2 pi k j / M), row-major [k-1][j].
    std::vector<double> cos_;
    std::vector<double> sin_;
    std::vector<double> analysis_scale_;
};

GridField to_grid(const SpectralField& u, int n_points);
SpectralField from_grid(const GridField& g, int n_modes);

/// Grid size that makes the truncated projection of P(u) alias-free for
/// degree q and N modes: (q + 1) N + 1.
int dealiased_grid_size(int degree, int n_modes) noexcept;

/// Reusable evaluator of the truncated projection of P(u); holds the transform
/// tables and a scratch grid, so one instance must not be shared across threads.
class PolynomialProjector {
public:
    PolynomialProjector(DriftPolynomial p, int n_modes);

    const DriftPolynomial& polynomial() const noexcept { return poly_; }
    void apply(const SpectralField& u, SpectralField& out);

private:
    DriftPolynomial poly_;
    TrigTransform transform_;
    std::vector<double> grid_;
};

/// Truncation-N projection of P(u) computed on a dealiased grid.
SpectralField eval_polynomial(const DriftPolynomial& p, const SpectralField& u);

/// Max |u| on an 8N-point grid (at least 2N+1). Converges from below as the
/// grid is refined; relative error is O((pi k / M)^2) for a mode k.
double sup_norm(const SpectralField& u);
double sup_norm(const SpectralField& u, int n_points);

}  // namespace sgl
