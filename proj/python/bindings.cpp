#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgl/config.hpp"
#include "sgl/doeblin.hpp"
#include "sgl/field.hpp"
#include "sgl/integrator.hpp"
#include "sgl/mixing.hpp"
#include "sgl/noise.hpp"

namespace py = pybind11;
using namespace sgl;
using namespace sgl::doeblin;

namespace {

std::vector<double> to_vec(const SpectralField& u) { return {u.coeffs().begin(), u.coeffs().end()}; }

SpectralField from_vec(const std::vector<double>& c) {
    if (c.empty() || c.size() % 2 == 0) throw std::invalid_argument("coefficient count must be 2N+1");
    return SpectralField(static_cast<int>(c.size() / 2), c);
}

RunConfig config_from(const std::string& text) { return text.empty() ? RunConfig{} : parse_config(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stochastic Ginzburg-Landau simulator and finite-state Doeblin toolkit";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<BlowUpError>(m, "BlowUpError", PyExc_ArithmeticError);

    m.def("eigenvalue", &mode_eigenvalue, py::arg("k"));
    m.def("norm_gamma", [](const std::vector<double>& c, double gamma) { return norm_gamma(from_vec(c), gamma); },
          py::arg("coeffs"), py::arg("gamma"));
    m.def("sup_norm", [](const std::vector<double>& c) { return sup_norm(from_vec(c)); }, py::arg("coeffs"));
    m.def("apply_semigroup", [](const std::vector<double>& c, double t) { return to_vec(apply_semigroup(from_vec(c), t)); },
          py::arg("coeffs"), py::arg("t"));
    m.def("eval_polynomial",
          [](const std::vector<double>& poly, const std::vector<double>& c) {
              return to_vec(eval_polynomial(DriftPolynomial(poly), from_vec(c)));
          },
          py::arg("poly"), py::arg("coeffs"));
    m.def("scaled_random_field",
          [](int n_modes, double gamma, double norm, std::uint64_t seed) {
              return to_vec(scaled_random_field(n_modes, gamma, norm, seed));
          },
          py::arg("n_modes"), py::arg("gamma"), py::arg("norm"), py::arg("seed"));

    m.def("spectrum_violation",
          [](const std::string& config) -> std::optional<std::string> {
              auto v = validate(config_from(config).spectrum());
              if (!v) return std::nullopt;
              return v->bound;
          },
          py::arg("config") = "");

    m.def("simulate",
          [](const std::vector<double>& x, const std::string& config, std::uint64_t trajectory_id) {
              const RunConfig cfg = config_from(config);
              SimulateOptions opt;
              opt.trajectory_id = trajectory_id;
              const Trajectory tr = simulate(from_vec(x), cfg.simulation_params(), opt);
              std::vector<std::vector<double>> states;
              for (const auto& s : tr.states) states.push_back(to_vec(s));
              return py::make_tuple(tr.times, states);
          },
          py::arg("x"), py::arg("config") = "", py::arg("trajectory_id") = 0,
          "Returns (times, states) at integer times 0..floor(t_final).");

    m.def("ode_comparison",
          [](int q, double c, double y0, double t, std::vector<double> breakpoints, std::vector<double> values) {
              const OdeComparison r = ode_comparison(q, c, y0, StepForcing{std::move(breakpoints), std::move(values)}, t);
              py::dict d;
              d["y"] = r.y;
              d["forcing_integral"] = r.forcing_integral;
              d["literal_bound"] = r.literal_bound;
              d["corrected_bound"] = r.corrected_bound;
              d["literal_holds"] = r.literal_holds;
              d["corrected_holds"] = r.corrected_holds;
              return d;
          },
          py::arg("q"), py::arg("c"), py::arg("y0"), py::arg("t"),
          py::arg("breakpoints") = std::vector<double>{0.0}, py::arg("values") = std::vector<double>{0.0});
    m.def("bernoulli_solution", &bernoulli_solution, py::arg("q"), py::arg("c"), py::arg("y0"), py::arg("t"));

    m.def("minorization",
          [](const Eigen::MatrixXd& p, std::vector<int> K, int steps) -> std::optional<py::dict> {
              const FiniteKernel kernel(p);
              if (K.empty())
                  for (int i = 0; i < kernel.n(); ++i) K.push_back(i);
              auto cert = minorization(kernel, K, steps);
              if (!cert) return std::nullopt;
              py::dict d;
              d["K"] = cert->K;
              d["m"] = cert->m;
              d["delta"] = cert->delta;
              d["nu"] = Eigen::VectorXd(cert->nu);
              return d;
          },
          py::arg("p"), py::arg("K") = std::vector<int>{}, py::arg("m") = 1);
    m.def("invariant_measure", [](const Eigen::MatrixXd& p) { return invariant_measure(FiniteKernel(p)); }, py::arg("p"));
    m.def("geometric_bound_check",
          [](const Eigen::MatrixXd& p, double epsilon, int horizon) {
              const GeometricReport r = geometric_bound_check(FiniteKernel(p), epsilon, horizon);
              return py::make_tuple(r.holds, r.distances, r.bounds);
          },
          py::arg("p"), py::arg("epsilon"), py::arg("horizon"));

    m.def("fit_rate",
          [](const std::vector<double>& t, const std::vector<double>& d, const std::vector<double>& floors) {
              const RateFit r = fit_rate(t, d, floors);
              return py::make_tuple(r.identifiable, r.lambda, r.C);
          },
          py::arg("times"), py::arg("distances"), py::arg("floors") = std::vector<double>{});

    m.def("moments",
          [](const std::string& config) {
              const RunConfig cfg = config_from(config);
              const MomentTable t = moment_bound(cfg.ensemble(), cfg.moment_time, {.ratio_threshold = cfg.ratio_threshold});
              std::vector<double> means;
              for (const auto& r : t.rows) means.push_back(r.mean);
              return py::make_tuple(t.uniform(), t.worst_ratio, means);
          },
          py::arg("config") = "");
}
