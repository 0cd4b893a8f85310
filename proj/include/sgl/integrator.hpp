#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/noise.hpp"

namespace sgl {

struct SimulationParams {
    int n_modes = 32;
    double dt = 1.0 / 256.0;
    double t_final = 1.0;
    /// Drift polynomial. std::nullopt selects the linear model P(u) = u, for which
    /// the effective nonlinearity N(u) = u - P(u) vanishes and each mode is an
    /// exact Ornstein-Uhlenbeck process.
    std::optional<DriftPolynomial> poly = DriftPolynomial::ginzburg_landau();
    NoiseSpectrum spectrum = NoiseSpectrum::degenerate_default(32);
    std::uint64_t seed = 0;
    double blowup_guard = 1e12;

    /// Steps per unit time; throws std::invalid_argument unless 1/dt is an integer.
    int steps_per_unit() const;
    /// Throws std::invalid_argument on any inconsistent field.
    void validate() const;

    static SimulationParams default_model();
};

/// Raised when a state's H-norm exceeds the blow-up guard. The drift is
/// dissipative, so this signals a step size too large for the explicit
/// treatment of the nonlinearity rather than a property of the model.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double time, double norm);
    double time() const noexcept { return time_; }
    double norm() const noexcept { return norm_; }

private:
    double time_;
    double norm_;
};

/// Exponential Euler step of the mild form
///   u' = e^{-Lh} u + phi(h) N(u) + xi,  N(u) = u - P(u),  phi_k(h) = (1 - e^{-l_k h}) / l_k,
/// with xi the exact stochastic-convolution increment. Holds scratch buffers, so
/// use one Stepper per thread.
class Stepper {
public:
    explicit Stepper(const SimulationParams& params);

    const ConvolutionStepSampler& sampler() const noexcept { return sampler_; }
    double dt() const noexcept { return sampler_.step_size(); }

    /// Draws the increment for (stream, step_index) into `increment` and advances u.
    void step(SpectralField& u, const StreamKey& stream, std::uint64_t step_index, SpectralField& increment);
    /// Deterministic part plus a caller-supplied increment.
    void step_with_increment(SpectralField& u, const SpectralField& increment);

    /// N(u) = u - P(u), truncated. Zero for the linear model.
    void effective_nonlinearity(const SpectralField& u, SpectralField& out);

private:
    ConvolutionStepSampler sampler_;
    std::optional<PolynomialProjector> projector_;
    std::vector<double> phi_;
    SpectralField scratch_;
};

/// Single exponential-Euler step as a free function.
SpectralField step(const SpectralField& u, const SimulationParams& params, const StreamKey& stream,
                   std::uint64_t step_index);

struct Trajectory {
    std::uint64_t trajectory_id = 0;
    SpectralField initial{1};
    /// Integer sample times 0..floor(T) and the chain Phi at those times.
    std::vector<double> times;
    std::vector<SpectralField> states;
    /// W_L at the same integer times.
    std::vector<SpectralField> convolution;
    /// Every step (including t = 0) when dense recording is on.
    std::vector<double> dense_times;
    std::vector<SpectralField> dense_states;
    std::vector<SpectralField> dense_convolution;

    /// Psi = Phi - W_L at integer sample i.
    SpectralField auxiliary(std::size_t i) const { return states[i] - convolution[i]; }
};

struct SimulateOptions {
    std::uint64_t trajectory_id = 0;
    bool record_dense = false;
};

/// Iterates the stepper from x and records the chain at integer times plus the
/// matched convolution path. Throws BlowUpError with the failing time.
Trajectory simulate(const SpectralField& x, const SimulationParams& params, const SimulateOptions& options = {});

/// Dini-inequality bookkeeping on a densely recorded trajectory.
struct DiniConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

struct DiniReport {
    std::size_t n_steps = 0;
    std::size_t n_satisfied = 0;
    double fraction = 1.0;
    /// Largest value of D^- psi - (c1 - c2 psi^q + c3 w^q) seen.
    double worst_excess = 0.0;
};

/// Fraction of steps where the backward difference of ||Psi_t||_inf satisfies
///   (psi_t - psi_{t-h}) / h <= c1 - c2 psi_t^q + c3 ||W_L(t)||_inf^q.
DiniReport dini_check(const Trajectory& traj, int degree, const DiniConstants& constants);

/// Proposes constants from a set of dense trajectories: c2 = p_q / 2,
/// c3 = 2^q p_q, and c1 the smallest value that makes every fitting step pass,
/// scaled by (1 + margin).
DiniConstants fit_dini_constants(const std::vector<Trajectory>& fitting_set, const DriftPolynomial& poly,
                                 double margin = 0.05);

/// Piecewise-constant forcing: value[i] on [breakpoint[i], breakpoint[i+1]),
/// last value continues to infinity. breakpoint[0] must be 0.
struct StepForcing {
    std::vector<double> breakpoints{0.0};
    std::vector<double> values{0.0};

    double operator()(double t) const;
    /// Integral of f over [0, t].
    double integral(double t) const;
};

struct OdeComparison {
    double y = 0.0;                 // numeric y(t)
    double forcing_integral = 0.0;  // int_0^t f
    double literal_bound = 0.0;     // (q c t)^{-1/(q-1)} + int f
    double corrected_bound = 0.0;   // ((q-1) c t)^{-1/(q-1)} + int f
    bool literal_holds = false;
    bool corrected_holds = false;
};

/// Integrates y' = -c y^q + f(t) from y(0) = y0 with an adaptive Dormand-Prince
/// scheme (per forcing segment) and evaluates both comparison bounds with the
/// given absolute tolerance.
OdeComparison ode_comparison(int q, double c, double y0, const StepForcing& f, double t, double tolerance = 1e-8);

/// y(t) for y' = -c y^q from y0 (closed form, no forcing).
double bernoulli_solution(int q, double c, double y0, double t);

}  // namespace sgl
