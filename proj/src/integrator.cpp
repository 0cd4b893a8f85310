#include "sgl/integrator.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <sstream>

namespace sgl {

int SimulationParams::steps_per_unit() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double inv = 1.0 / dt;
    const double rounded = std::round(inv);
    if (rounded < 1.0 || std::abs(inv - rounded) > 1e-9 * rounded)
        throw std::invalid_argument("dt must divide 1 exactly (1/dt integer), got dt = " + std::to_string(dt));
    return static_cast<int>(rounded);
}

void SimulationParams::validate() const {
    if (n_modes < 1) throw std::invalid_argument("n_modes must be positive");
    (void)steps_per_unit();
    if (!(t_final >= 1.0)) throw std::invalid_argument("t_final must be >= 1");
    if (spectrum.n_modes() != n_modes)
        throw std::invalid_argument("noise spectrum has " + std::to_string(spectrum.n_modes()) +
                                    " modes but the model uses " + std::to_string(n_modes));
    if (auto v = sgl::validate(spectrum)) throw std::invalid_argument("noise spectrum invalid: " + v->message);
    if (!(blowup_guard > 0.0)) throw std::invalid_argument("blow-up guard must be positive");
}

SimulationParams SimulationParams::default_model() { return SimulationParams{}; }

namespace {

std::string blowup_message(double time, double norm) {
    std::ostringstream os;
    os << "state norm " << norm << " exceeded the blow-up guard at t = " << time
       << " (reduce dt; the explicit nonlinearity is unstable at this amplitude)";
    return os.str();
}

}  // namespace

BlowUpError::BlowUpError(double time, double norm)
    : std::runtime_error(blowup_message(time, norm)), time_(time), norm_(norm) {}

Stepper::Stepper(const SimulationParams& params)
    : sampler_(params.spectrum, params.dt), scratch_(params.n_modes) {
    if (params.spectrum.n_modes() != params.n_modes)
        throw std::invalid_argument("noise spectrum size does not match n_modes");
    if (params.poly) projector_.emplace(*params.poly, params.n_modes);
    const auto slots = static_cast<std::size_t>(2 * params.n_modes + 1);
    phi_.resize(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        const double lk = mode_eigenvalue(SpectralField::mode_of_slot(i));
        phi_[i] = -std::expm1(-lk * params.dt) / lk;
    }
}

void Stepper::effective_nonlinearity(const SpectralField& u, SpectralField& out) {
    if (!projector_) {
        std::fill(out.coeffs().begin(), out.coeffs().end(), 0.0);
        return;
    }
    projector_->apply(u, out);
    auto o = out.coeffs();
    const auto c = u.coeffs();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = c[i] - o[i];
}

void Stepper::step_with_increment(SpectralField& u, const SpectralField& increment) {
    const auto decay = sampler_.decay();
    auto c = u.coeffs();
    const auto xi = increment.coeffs();
    if (projector_) {
        effective_nonlinearity(u, scratch_);
        const auto nl = scratch_.coeffs();
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = decay[i] * c[i] + phi_[i] * nl[i] + xi[i];
    } else {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = decay[i] * c[i] + xi[i];
    }
}

void Stepper::step(SpectralField& u, const StreamKey& stream, std::uint64_t step_index, SpectralField& increment) {
    sampler_.sample(stream, step_index, increment.coeffs());
    step_with_increment(u, increment);
}

SpectralField step(const SpectralField& u, const SimulationParams& params, const StreamKey& stream,
                   std::uint64_t step_index) {
    if (!(params.dt > 0.0)) throw std::invalid_argument("step needs h > 0");
    Stepper stepper(params);
    SpectralField out = u;
    SpectralField increment(params.n_modes);
    stepper.step(out, stream, step_index, increment);
    return out;
}

Trajectory simulate(const SpectralField& x, const SimulationParams& params, const SimulateOptions& options) {
    params.validate();
    if (x.n_modes() != params.n_modes) throw std::invalid_argument("initial condition has the wrong truncation order");
    if (!x.is_finite()) throw std::invalid_argument("initial condition is not finite");

    const int spu = params.steps_per_unit();
    const auto total_steps = static_cast<std::uint64_t>(std::floor(params.t_final * spu + 1e-9));
    const auto n_integer = static_cast<std::size_t>(total_steps / static_cast<std::uint64_t>(spu)) + 1;

    Trajectory traj;
    traj.trajectory_id = options.trajectory_id;
    traj.initial = x;
    traj.times.reserve(n_integer);
    traj.states.reserve(n_integer);
    traj.convolution.reserve(n_integer);

    Stepper stepper(params);
    const StreamKey stream(params.seed, options.trajectory_id);
    SpectralField u = x;
    SpectralField w(params.n_modes);
    SpectralField increment(params.n_modes);

    traj.times.push_back(0.0);
    traj.states.push_back(u);
    traj.convolution.push_back(w);
    if (options.record_dense) {
        traj.dense_times.reserve(total_steps + 1);
        traj.dense_states.reserve(total_steps + 1);
        traj.dense_convolution.reserve(total_steps + 1);
        traj.dense_times.push_back(0.0);
        traj.dense_states.push_back(u);
        traj.dense_convolution.push_back(w);
    }

    const double guard_sq = params.blowup_guard * params.blowup_guard;
    for (std::uint64_t s = 0; s < total_steps; ++s) {
        stepper.step(u, stream, s, increment);
        stepper.sampler().advance(w, increment.coeffs());
        const double t = static_cast<double>(s + 1) / spu;
        double norm_sq = 0.0;
        for (double c : u.coeffs()) norm_sq += c * c;
        if (!(norm_sq <= guard_sq)) throw BlowUpError(t, std::sqrt(norm_sq));
        if (options.record_dense) {
            traj.dense_times.push_back(t);
            traj.dense_states.push_back(u);
            traj.dense_convolution.push_back(w);
        }
        if ((s + 1) % static_cast<std::uint64_t>(spu) == 0) {
            traj.times.push_back(static_cast<double>((s + 1) / static_cast<std::uint64_t>(spu)));
            traj.states.push_back(u);
            traj.convolution.push_back(w);
        }
    }
    return traj;
}

DiniReport dini_check(const Trajectory& traj, int degree, const DiniConstants& k) {
    if (traj.dense_states.size() < 2) throw std::invalid_argument("dini_check needs a densely recorded trajectory");
    if (!(k.c1 > 0.0 && k.c2 > 0.0 && k.c3 > 0.0)) throw std::invalid_argument("Dini constants must be positive");
    DiniReport rep;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    double prev = sup_norm(traj.dense_states[0] - traj.dense_convolution[0]);
    for (std::size_t i = 1; i < traj.dense_states.size(); ++i) {
        const double h = traj.dense_times[i] - traj.dense_times[i - 1];
        const double psi = sup_norm(traj.dense_states[i] - traj.dense_convolution[i]);
        const double w = sup_norm(traj.dense_convolution[i]);
        const double derivative = (psi - prev) / h;
        const double rhs = k.c1 - k.c2 * std::pow(psi, degree) + k.c3 * std::pow(w, degree);
        const double excess = derivative - rhs;
        rep.worst_excess = std::max(rep.worst_excess, excess);
        ++rep.n_steps;
        if (excess <= 0.0) ++rep.n_satisfied;
        prev = psi;
    }
    rep.fraction = static_cast<double>(rep.n_satisfied) / static_cast<double>(rep.n_steps);
    return rep;
}

DiniConstants fit_dini_constants(const std::vector<Trajectory>& fitting_set, const DriftPolynomial& poly,
                                 double margin) {
    const int q = poly.degree();
    const double lead = poly.coefficients().back();
    DiniConstants k;
    k.c2 = 0.5 * lead;
    k.c3 = std::ldexp(lead, q);
    double needed = 0.0;
    for (const auto& traj : fitting_set) {
        if (traj.dense_states.size() < 2) throw std::invalid_argument("fitting needs dense trajectories");
        double prev = sup_norm(traj.dense_states[0] - traj.dense_convolution[0]);
        for (std::size_t i = 1; i < traj.dense_states.size(); ++i) {
            const double h = traj.dense_times[i] - traj.dense_times[i - 1];
            const double psi = sup_norm(traj.dense_states[i] - traj.dense_convolution[i]);
            const double w = sup_norm(traj.dense_convolution[i]);
            const double derivative = (psi - prev) / h;
            needed = std::max(needed, derivative + k.c2 * std::pow(psi, q) - k.c3 * std::pow(w, q));
            prev = psi;
        }
    }
    // c1 must stay strictly positive even when every step already decays.
    k.c1 = std::max(needed * (1.0 + margin), 1e-12);
    return k;
}

double StepForcing::operator()(double t) const {
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - breakpoints.begin()) - 1));
    return values[idx];
}

double StepForcing::integral(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        const double a = breakpoints[i];
        if (a >= t) break;
        const double b = i + 1 < breakpoints.size() ? std::min(breakpoints[i + 1], t) : t;
        acc += values[i] * (b - a);
    }
    return acc;
}

double bernoulli_solution(int q, double c, double y0, double t) {
    // y^{1-q} grows linearly: y(t)^{1-q} = y0^{1-q} + (q-1) c t.
    const double e = static_cast<double>(q - 1);
    return std::pow(std::pow(y0, -e) + e * c * t, -1.0 / e);
}

OdeComparison ode_comparison(int q, double c, double y0, const StepForcing& f, double t, double tolerance) {
    if (q < 3 || q % 2 == 0) throw std::invalid_argument("q must be an odd integer >= 3");
    if (!(c > 0.0 && y0 > 0.0 && t > 0.0)) throw std::invalid_argument("c, y0 and t must be positive");
    if (f.breakpoints.empty() || f.breakpoints.size() != f.values.size() || f.breakpoints.front() != 0.0)
        throw std::invalid_argument("forcing needs matching breakpoints/values starting at 0");
    if (!std::is_sorted(f.breakpoints.begin(), f.breakpoints.end()))
        throw std::invalid_argument("forcing breakpoints must be increasing");
    if (std::any_of(f.values.begin(), f.values.end(), [](double v) { return !(v >= 0.0); }))
        throw std::invalid_argument("forcing must be nonnegative");

    namespace odeint = boost::numeric::odeint;
    using State = double;
    auto stepper = odeint::make_controlled(1e-14, 1e-13, odeint::runge_kutta_dopri5<State>{});

    double y = y0;
    for (std::size_t i = 0; i < f.breakpoints.size() && f.breakpoints[i] < t; ++i) {
        const double a = f.breakpoints[i];
        const double b = i + 1 < f.breakpoints.size() ? std::min(f.breakpoints[i + 1], t) : t;
        const double fi = f.values[i];
        auto rhs = [q, c, fi](const State& s, State& ds, double) { ds = -c * std::pow(s, q) + fi; };
        // Initial step sized to the stiffness scale q c y^{q-1}.
        const double dt0 = std::min(b - a, 1e-3 / (1.0 + q * c * std::pow(std::abs(y), q - 1)));
        odeint::integrate_adaptive(stepper, rhs, y, a, b, dt0);
    }

    OdeComparison out;
    out.y = y;
    out.forcing_integral = f.integral(t);
    const double e = static_cast<double>(q - 1);
    out.literal_bound = std::pow(q * c * t, -1.0 / e) + out.forcing_integral;
    out.corrected_bound = std::pow(e * c * t, -1.0 / e) + out.forcing_integral;
    out.literal_holds = out.y <= out.literal_bound + tolerance;
    out.corrected_holds = out.y <= out.corrected_bound + tolerance;
    return out;
}

}  // namespace sgl
