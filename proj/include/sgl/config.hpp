#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgl/integrator.hpp"
#include "sgl/mixing.hpp"

namespace sgl {

/// Parse or validation failure, carrying the 1-based line of the offending entry
/// (0 when the problem is not tied to a line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Initial condition preset: "zero", "scaled-random:R", or "coeffs:c0,a1,b1,...".
struct InitialConditionSpec {
    std::string text;
    SpectralField build(int n_modes, double gamma, std::uint64_t seed) const;
};

/// Fully resolved run configuration. Every output file starts with this block
/// (as '#'-prefixed lines) so it can be regenerated from its own header.
struct RunConfig {
    // [model]
    int n_modes = 32;
    double dt = 1.0 / 256.0;
    double t_final = 1.0;
    std::vector<double> poly{0.0, -1.0, 0.0, 1.0};  // empty means the linear model P(u) = u
    double alpha = 2.0;
    double beta = 2.0;
    double c1_const = 1.0;
    double c2_const = 1.0;
    int k_star = 3;
    std::vector<std::pair<int, double>> q_overrides;
    std::uint64_t seed = 20010327;
    double blowup_guard = 1e12;

    // [ensemble]
    std::vector<InitialConditionSpec> initial{{"zero"}, {"scaled-random:100"}, {"scaled-random:10000"}};
    std::size_t n_traj = 1000;
    double gamma = 1.0;
    double p = 2.0;
    std::uint64_t ic_seed = 1;

    // [moments]
    double moment_time = 1.0;
    double ratio_threshold = 2.0;

    // [mixing]
    int t_max = 10;
    int n_bootstrap = 200;
    int bins = 32;

    // [simulate]
    std::size_t simulate_traj = 1;

    // [doeblin]
    std::string kernel_path;
    std::vector<int> K;  // empty means the full space
    int m = 1;
    std::string mu0 = "uniform";
    int horizon = 50;

    // [odecheck]
    std::vector<int> ode_q{3, 5, 7};
    std::vector<double> ode_c{0.5, 1.0, 2.0};
    std::vector<double> ode_y0{0.1, 1.0, 10.0};
    std::vector<double> ode_t{0.1, 0.5, 2.0};

    int threads = 1;

    NoiseSpectrum spectrum() const;
    SimulationParams simulation_params() const;
    /// Ensemble over the configured initial conditions.
    EnsembleSpec ensemble() const;

    /// Canonical key = value text with [section] headers (round-trips through parse).
    std::string to_text() const;
    /// to_text() with every line prefixed by "# " and closed by "# end-config".
    std::string header() const;
};

/// Parses line-oriented `key = value` text with [section] headers. '#' starts a
/// comment. Unknown sections or keys are errors. A CSV produced by sglcheck is
/// also accepted; its header block is read back as the configuration.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace sgl
