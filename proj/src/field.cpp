#include "sgl/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sgl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t slot_count(int n_modes) {
    if (n_modes < 1) throw std::invalid_argument("n_modes must be positive, got " + std::to_string(n_modes));
    return static_cast<std::size_t>(2 * n_modes + 1);
}

void require_same_shape(const SpectralField& a, const SpectralField& b) {
    if (a.n_modes() != b.n_modes()) throw std::invalid_argument("spectral fields have different truncation orders");
}

}  // namespace

double mode_eigenvalue(int k) noexcept {
    const double w = kTwoPi * k;
    return 1.0 + w * w;
}

SpectralField::SpectralField(int n_modes) : n_modes_(n_modes), coeffs_(slot_count(n_modes), 0.0) {}

SpectralField::SpectralField(int n_modes, std::vector<double> coeffs)
    : n_modes_(n_modes), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != slot_count(n_modes))
        throw std::invalid_argument("expected " + std::to_string(slot_count(n_modes)) + " coefficients, got " +
                                    std::to_string(coeffs_.size()));
    if (!is_finite()) throw std::invalid_argument("spectral coefficients must be finite");
}

SpectralField SpectralField::constant(int n_modes, double value) {
    SpectralField f(n_modes);
    f.coeffs_[0] = value;
    return f;
}

SpectralField SpectralField::cosine(int n_modes, int k, double amplitude) {
    if (k == 0) return constant(n_modes, amplitude);
    if (k < 0 || k > n_modes) throw std::out_of_range("mode index out of range");
    SpectralField f(n_modes);
    f.coeffs_[2 * k - 1] = amplitude * std::sqrt(mode_eigenvalue(k) / 2.0);
    return f;
}

SpectralField SpectralField::sine(int n_modes, int k, double amplitude) {
    if (k < 1 || k > n_modes) throw std::out_of_range("mode index out of range");
    SpectralField f(n_modes);
    f.coeffs_[2 * k] = amplitude * std::sqrt(mode_eigenvalue(k) / 2.0);
    return f;
}

SpectralField SpectralField::basis(int n_modes, int k) {
    if (k < 0 || k > n_modes) throw std::out_of_range("mode index out of range");
    SpectralField f(n_modes);
    f.coeffs_[k == 0 ? 0 : 2 * k - 1] = 1.0;
    return f;
}

bool SpectralField::is_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same_shape(*this, other);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double s) noexcept {
    for (double& c : coeffs_) c *= s;
    return *this;
}

DriftPolynomial::DriftPolynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
    if (std::any_of(coeffs_.begin(), coeffs_.end(), [](double c) { return !std::isfinite(c); }))
        throw std::invalid_argument("polynomial coefficients must be finite");
    const int q = degree();
    if (q < 3 || q % 2 == 0)
        throw std::invalid_argument("drift polynomial must have odd degree >= 3, got degree " + std::to_string(q));
    if (coeffs_.back() <= 0.0) throw std::invalid_argument("drift polynomial needs a positive leading coefficient");
}

DriftPolynomial DriftPolynomial::ginzburg_landau() { return DriftPolynomial({0.0, -1.0, 0.0, 1.0}); }

double DriftPolynomial::operator()(double u) const noexcept {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * u + *it;
    return acc;
}

double norm_gamma(const SpectralField& u, double gamma) {
    const auto c = u.coeffs();
    double acc = c[0] * c[0];
    for (int k = 1; k <= u.n_modes(); ++k) {
        const double w = std::pow(mode_eigenvalue(k), 2.0 * gamma);
        acc += w * (c[2 * k - 1] * c[2 * k - 1] + c[2 * k] * c[2 * k]);
    }
    return std::sqrt(acc);
}

SpectralField apply_semigroup(const SpectralField& u, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be nonnegative");
    SpectralField out = u;
    auto c = out.coeffs();
    c[0] *= std::exp(-t);
    for (int k = 1; k <= u.n_modes(); ++k) {
        const double decay = std::exp(-mode_eigenvalue(k) * t);
        c[2 * k - 1] *= decay;
        c[2 * k] *= decay;
    }
    return out;
}

bool smoothing_norm_check(const SpectralField& u, double t, double gamma, double sigma) {
    if (!(t > 0.0)) throw std::invalid_argument("smoothing check needs t > 0");
    const double lhs = norm_gamma(apply_semigroup(u, t), gamma + sigma);
    const double rhs = std::pow(t, -sigma) * norm_gamma(u, gamma);
    return lhs <= rhs;
}

TrigTransform::TrigTransform(int n_modes, int n_points) : n_modes_(n_modes), n_points_(n_points) {
    if (n_modes < 1) throw std::invalid_argument("n_modes must be positive");
    if (n_points < 2 * n_modes + 1)
        throw std::invalid_argument("grid of " + std::to_string(n_points) + " points cannot resolve " +
                                    std::to_string(n_modes) + " modes (need at least " +
                                    std::to_string(2 * n_modes + 1) + ")");
    const auto m = static_cast<std::size_t>(n_points);
    cos_.resize(static_cast<std::size_t>(n_modes) * m);
    sin_.resize(cos_.size());
    analysis_scale_.resize(static_cast<std::size_t>(n_modes) + 1);
    analysis_scale_[0] = 1.0 / n_points;
    for (int k = 1; k <= n_modes; ++k) {
        const double lk = mode_eigenvalue(k);
        const double amp = std::sqrt(2.0 / lk);
        analysis_scale_[k] = lk / n_points;
        double* cr = &cos_[(k - 1) * m];
        double* sr = &sin_[(k - 1) * m];
        for (std::size_t j = 0; j < m; ++j) {
            // Reduce k*j mod M first so large arguments do not lose accuracy.
            const auto idx = (static_cast<std::size_t>(k) * j) % m;
            const double angle = kTwoPi * static_cast<double>(idx) / n_points;
            cr[j] = amp * std::cos(angle);
            sr[j] = amp * std::sin(angle);
        }
    }
}

void TrigTransform::synthesize(std::span<const double> coeffs, std::span<double> values) const {
    const auto m = static_cast<std::size_t>(n_points_);
    std::fill(values.begin(), values.end(), coeffs[0]);
    for (int k = 1; k <= n_modes_; ++k) {
        const double ak = coeffs[2 * k - 1];
        const double bk = coeffs[2 * k];
        const double* cr = &cos_[(k - 1) * m];
        const double* sr = &sin_[(k - 1) * m];
        for (std::size_t j = 0; j < m; ++j) values[j] += ak * cr[j] + bk * sr[j];
    }
}

void TrigTransform::analyze(std::span<const double> values, std::span<double> coeffs) const {
    const auto m = static_cast<std::size_t>(n_points_);
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += values[j];
    coeffs[0] = mean * analysis_scale_[0];
    for (int k = 1; k <= n_modes_; ++k) {
        const double* cr = &cos_[(k - 1) * m];
        const double* sr = &sin_[(k - 1) * m];
        double ac = 0.0;
        double as = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            ac += values[j] * cr[j];
            as += values[j] * sr[j];
        }
        coeffs[2 * k - 1] = ac * analysis_scale_[k];
        coeffs[2 * k] = as * analysis_scale_[k];
    }
}

GridField to_grid(const SpectralField& u, int n_points) {
    TrigTransform tr(u.n_modes(), n_points);
    GridField g{std::vector<double>(static_cast<std::size_t>(n_points))};
    tr.synthesize(u.coeffs(), g.values);
    return g;
}

SpectralField from_grid(const GridField& g, int n_modes) {
    TrigTransform tr(n_modes, static_cast<int>(g.n_points()));
    SpectralField out(n_modes);
    tr.analyze(g.values, out.coeffs());
    return out;
}

int dealiased_grid_size(int degree, int n_modes) noexcept { return (degree + 1) * n_modes + 1; }

PolynomialProjector::PolynomialProjector(DriftPolynomial p, int n_modes)
    : poly_(std::move(p)),
      transform_(n_modes, dealiased_grid_size(poly_.degree(), n_modes)),
      grid_(static_cast<std::size_t>(transform_.n_points())) {}

void PolynomialProjector::apply(const SpectralField& u, SpectralField& out) {
    transform_.synthesize(u.coeffs(), grid_);
    for (double& v : grid_) v = poly_(v);
    transform_.analyze(grid_, out.coeffs());
}

SpectralField eval_polynomial(const DriftPolynomial& p, const SpectralField& u) {
    PolynomialProjector proj(p, u.n_modes());
    SpectralField out(u.n_modes());
    proj.apply(u, out);
    return out;
}

double sup_norm(const SpectralField& u) { return sup_norm(u, std::max(8 * u.n_modes(), 2 * u.n_modes() + 1)); }

double sup_norm(const SpectralField& u, int n_points) {
    const GridField g = to_grid(u, n_points);
    double m = 0.0;
    for (double v : g.values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace sgl
