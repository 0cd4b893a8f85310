#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/rng.hpp"

namespace sgl {

/// Spectrum of the diagonal noise operator Q.
///
/// q[k] is the eigenvalue on both trigonometric functions of frequency k, for
/// k = 0..N. Above k_star the eigenvalues must sit inside the window
/// C1 k^{-2 alpha} <= q_k <= C2 k^{-2 beta}; at or below k_star they are free
/// (zero allowed), which is how the unstable low modes are left unforced.
struct NoiseSpectrum {
    double alpha = 2.0;
    double beta = 2.0;
    double c1 = 1.0;
    double c2 = 1.0;
    int k_star = 3;
    std::vector<double> q;

    int n_modes() const noexcept { return static_cast<int>(q.size()) - 1; }

    /// q_k = k^{-2 alpha} above k_star, zero at and below it (including q_0).
    static NoiseSpectrum degenerate_default(int n_modes, double alpha = 2.0, int k_star = 3);
};

/// First violated bound of the spectrum assumptions.
struct SpectrumViolation {
    std::string bound;  // "alpha_min", "beta_window", "c1_positive", ...
    int k = -1;         // offending mode, -1 when the bound is not per-mode
    double value = 0.0;
    double limit = 0.0;
    std::string message;

    /// key = value lines for the CLI.
    std::string to_text() const;
};

std::optional<SpectrumViolation> validate(const NoiseSpectrum& spec);

/// Exact one-step sampler of the stochastic convolution W_L.
///
/// Per mode the convolution is an Ornstein-Uhlenbeck process, so over a step h
///   W_k(t+h) = e^{-l_k h} W_k(t) + xi_k,   xi_k ~ N(0, q_k^2 (1 - e^{-2 l_k h}) / (2 l_k)).
class ConvolutionStepSampler {
public:
    /// Throws std::invalid_argument when h <= 0 or the spectrum is empty.
    ConvolutionStepSampler(NoiseSpectrum spectrum, double h);

    const NoiseSpectrum& spectrum() const noexcept { return spectrum_; }
    double step_size() const noexcept { return h_; }
    int n_modes() const noexcept { return spectrum_.n_modes(); }

    /// Standard deviation of the increment on mode k.
    double step_stddev(int k) const noexcept { return stddev_[static_cast<std::size_t>(k)]; }
    /// Per-slot decay e^{-l_k h}, laid out like SpectralField coefficients.
    std::span<const double> decay() const noexcept { return decay_; }

    /// Writes the increment for (stream, step) into out (size 2N+1). Unforced
    /// modes get exactly 0.
    void sample(const StreamKey& stream, std::uint64_t step, std::span<double> out) const;
    SpectralField sample(const StreamKey& stream, std::uint64_t step) const;

    /// W_L(t+h) = e^{-Lh} W_L(t) + xi, in place.
    void advance(SpectralField& convolution, std::span<const double> increment) const;

private:
    NoiseSpectrum spectrum_;
    double h_;
    std::vector<double> stddev_;
    std::vector<double> decay_;
    std::vector<double> slot_stddev_;
};

/// Variance of the exact increment, q_k^2 (1 - e^{-2 l_k h}) / (2 l_k).
double convolution_step_variance(double q_k, int k, double h);

struct SupGaussianEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_samples = 0;
};

/// Monte Carlo estimate of E sup_{s <= t} ||W_L(s)||_inf^p on the step grid of
/// size h. Sample i uses trajectory id i of the given seed.
SupGaussianEstimate sup_gaussian_check(const NoiseSpectrum& spec, double t, double p, std::size_t n_samples,
                                       std::uint64_t seed, double h = 1.0 / 256.0);

}  // namespace sgl
