#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sgl/field.hpp"
#include "sgl/integrator.hpp"

namespace sgl {

/// Ensemble of trajectories for one or more initial conditions.
///
/// Trajectory j of initial condition i uses stream id
/// trajectory_offset + i * n_traj + j, so results do not depend on the thread
/// count or scheduling.
struct EnsembleSpec {
    std::vector<SpectralField> initial_conditions;
    std::size_t n_traj = 1000;
    SimulationParams params = SimulationParams::default_model();
    double gamma = 1.0;
    double p = 2.0;
    std::uint64_t trajectory_offset = 0;
    int threads = 1;

    /// Throws std::invalid_argument when gamma > alpha, p < 1, or the params are invalid.
    void validate() const;
    std::uint64_t trajectory_id(std::size_t ic, std::size_t j) const noexcept {
        return trajectory_offset + ic * n_traj + j;
    }
};

/// Field with i.i.d. standard normal coordinates (stream `seed`, id 0),
/// rescaled so that ||x||_gamma = norm. norm = 0 gives the zero field.
SpectralField scaled_random_field(int n_modes, double gamma, double norm, std::uint64_t seed);

/// States of every trajectory of every initial condition at integer times 0..t_max.
struct EnsembleSamples {
    std::vector<double> times;
    /// [ic][traj][time]; empty time series for aborted trajectories.
    std::vector<std::vector<std::vector<SpectralField>>> states;
    /// [ic][traj] abort time, or negative when the trajectory completed.
    std::vector<std::vector<double>> abort_time;

    /// All completed states of initial condition ic at time index ti, in trajectory order.
    std::vector<SpectralField> at(std::size_t ic, std::size_t ti) const;
};

EnsembleSamples run_ensemble(const EnsembleSpec& spec, int t_max);

struct MomentRow {
    std::size_t ic = 0;
    double initial_norm = 0.0;  // ||x||_gamma
    double t = 0.0;
    double mean = 0.0;          // estimate of E ||Phi_t(x)||_gamma^p
    double std_error = 0.0;
    double ci_low = 0.0;        // 95%
    double ci_high = 0.0;
    std::size_t n_used = 0;
    std::size_t n_aborted = 0;
};

struct UniformityOptions {
    double ratio_threshold = 2.0;
    bool require_ci_overlap = true;
};

struct MomentTable {
    std::vector<MomentRow> rows;
    double worst_ratio = 1.0;   // max over pairs of max(a/b, b/a)
    bool ratios_ok = false;
    bool cis_overlap = false;
    bool any_aborted = false;
    bool uniform() const noexcept { return ratios_ok && cis_overlap && !any_aborted; }
};

/// Judges pairwise ratios and 95% CI overlap across rows.
void judge_uniformity(MomentTable& table, const UniformityOptions& options = {});

/// Monte Carlo estimate of E ||Phi_t(x)||_gamma^p for every initial condition.
/// t must be a positive multiple of dt.
MomentTable moment_bound(const EnsembleSpec& spec, double t, const UniformityOptions& options = {});

/// Monte Carlo estimate of E sup_{t1 < s < t2} ||Phi_s(x)||_inf over the step grid.
MomentTable sup_window_bound(const EnsembleSpec& spec, double t1, double t2, const UniformityOptions& options = {});

/// Observable projection O(u) = (||u||_gamma, c_0, a_1, b_1, a_2, b_2).
inline constexpr int kObservableDim = 6;
Eigen::VectorXd observables(const SpectralField& u, double gamma);
Eigen::MatrixXd observables(const std::vector<SpectralField>& ensemble, double gamma);

struct LawDistanceOptions {
    int bins = 32;
    /// Weight bins by V(u) = |O_0|^p + 1 (the first observable column). False
    /// gives the plain histogram total variation.
    bool weighted = true;
    double p = 2.0;
};

struct LawDistance {
    double proxy = 0.0;             // weighted (or plain) TV proxy, max over axes
    double plain_tv = 0.0;          // unweighted max over axes
    double sliced_mean_diff = 0.0;  // max over axes |mean_A - mean_B| / pooled sd
    std::vector<double> per_axis;
};

/// Histogram distance between two sample clouds (rows are samples). Each axis
/// is binned into `bins` equal-width bins over the pooled range; the weighted
/// mass of |hist_A - hist_B| is taken per axis and the proxy is the maximum.
/// Bins of the first axis carry V at the bin center; other axes carry the mean
/// of V over the pooled samples in the bin.
LawDistance histogram_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const LawDistanceOptions& options);

/// Weighted variation proxy between two ensembles at the same time.
LawDistance law_distance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b, double gamma,
                         double p, const LawDistanceOptions& options = {});

struct RateFit {
    bool identifiable = false;
    double lambda = 0.0;
    double C = 0.0;
    std::size_t n_used = 0;
    std::string reason;
};

struct RateFitOptions {
    /// Points with distance <= floor_factor * floor are excluded.
    double floor_factor = 3.0;
};

/// Least squares of log d against t over points above the floor:
/// d ~ C exp(-lambda t).
RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& distances,
                 const std::vector<double>& floors = {}, const RateFitOptions& options = {});

struct MixingOptions {
    int t_max = 10;
    int n_bootstrap = 200;
    std::uint64_t bootstrap_seed = 7;
    LawDistanceOptions distance;
    RateFitOptions fit;
};

struct MixingReport {
    std::vector<double> times;
    std::vector<double> distances;
    std::vector<double> std_errors;  // bootstrap over trajectories
    std::vector<double> floors;      // split-half estimate of the statistical floor
    RateFit fit;
    double lambda_ci_low = 0.0;
    double lambda_ci_high = 0.0;
    std::size_t n_bootstrap_identifiable = 0;

    /// CSV rows "t,distance,stderr,floor" with a header line.
    std::string to_csv() const;
    /// key = value block (lambda, lambda_ci_low, lambda_ci_high, C, ...).
    std::string summary() const;
};

/// Distances between the laws of the first two initial conditions at integer
/// times 1..t_max, floor estimates, rate fit and a bootstrap CI for lambda.
MixingReport mixing_report(const EnsembleSpec& spec, const MixingOptions& options = {});
MixingReport mixing_report(const EnsembleSamples& samples, double gamma, const MixingOptions& options);

}  // namespace sgl
