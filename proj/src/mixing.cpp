#include "sgl/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"
#include "sgl/rng.hpp"

namespace sgl {

namespace {

struct Summary {
    double mean = 0.0;
    double std_error = 0.0;
};

Summary summarize(const std::vector<double>& xs) {
    Summary s;
    if (xs.empty()) return s;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) s.mean += x;
    s.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

std::uint64_t steps_for(double t, double dt) {
    const double steps = t / dt;
    const double rounded = std::round(steps);
    if (!(rounded >= 1.0) || std::abs(steps - rounded) > 1e-9 * rounded)
        throw std::invalid_argument("time " + std::to_string(t) + " is not a positive multiple of dt");
    return static_cast<std::uint64_t>(rounded);
}

/// Evolves one trajectory for `steps` steps calling observe(step_index + 1, u)
/// after each step. Returns the abort time or a negative value.
template <class Observe>
double evolve(const SpectralField& x, const SimulationParams& params, std::uint64_t trajectory_id,
              std::uint64_t steps, Observe&& observe) {
    Stepper stepper(params);
    const StreamKey stream(params.seed, trajectory_id);
    SpectralField u = x;
    SpectralField increment(params.n_modes);
    const double guard_sq = params.blowup_guard * params.blowup_guard;
    for (std::uint64_t s = 0; s < steps; ++s) {
        stepper.step(u, stream, s, increment);
        double norm_sq = 0.0;
        for (double c : u.coeffs()) norm_sq += c * c;
        if (!(norm_sq <= guard_sq)) return static_cast<double>(s + 1) * params.dt;
        observe(s + 1, u);
    }
    return -1.0;
}

void fill_row(MomentRow& row, const std::vector<double>& values, std::size_t n_aborted) {
    const Summary s = summarize(values);
    row.mean = s.mean;
    row.std_error = s.std_error;
    row.ci_low = s.mean - 1.96 * s.std_error;
    row.ci_high = s.mean + 1.96 * s.std_error;
    row.n_used = values.size();
    row.n_aborted = n_aborted;
}

}  // namespace

void EnsembleSpec::validate() const {
    params.validate();
    if (initial_conditions.empty()) throw std::invalid_argument("ensemble needs at least one initial condition");
    for (const auto& x : initial_conditions)
        if (x.n_modes() != params.n_modes) throw std::invalid_argument("initial condition has the wrong truncation order");
    if (n_traj < 2) throw std::invalid_argument("ensemble needs at least 2 trajectories per initial condition");
    if (!(gamma <= params.spectrum.alpha))
        throw std::invalid_argument("gamma must not exceed alpha (got gamma = " + std::to_string(gamma) + ")");
    if (!(p >= 1.0)) throw std::invalid_argument("p must be >= 1");
}

SpectralField scaled_random_field(int n_modes, double gamma, double norm, std::uint64_t seed) {
    if (!(norm >= 0.0)) throw std::invalid_argument("target norm must be >= 0");
    SpectralField x(n_modes);
    if (norm == 0.0) return x;
    NormalSequence rng(seed, 0);
    for (double& c : x.coeffs()) c = rng.next();
    x *= norm / norm_gamma(x, gamma);
    return x;
}

std::vector<SpectralField> EnsembleSamples::at(std::size_t ic, std::size_t ti) const {
    std::vector<SpectralField> out;
    out.reserve(states[ic].size());
    for (const auto& series : states[ic])
        if (!series.empty()) out.push_back(series[ti]);
    return out;
}

EnsembleSamples run_ensemble(const EnsembleSpec& spec, int t_max) {
    if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
    EnsembleSpec local = spec;
    local.params.t_final = t_max;
    local.validate();
    const std::size_t n_ic = local.initial_conditions.size();

    EnsembleSamples out;
    for (int t = 0; t <= t_max; ++t) out.times.push_back(t);
    out.states.assign(n_ic, std::vector<std::vector<SpectralField>>(local.n_traj));
    out.abort_time.assign(n_ic, std::vector<double>(local.n_traj, -1.0));

    detail::parallel_for(n_ic * local.n_traj, local.threads, [&](std::size_t idx) {
        const std::size_t ic = idx / local.n_traj;
        const std::size_t j = idx % local.n_traj;
        try {
            Trajectory traj = simulate(local.initial_conditions[ic], local.params,
                                       {.trajectory_id = local.trajectory_id(ic, j), .record_dense = false});
            out.states[ic][j] = std::move(traj.states);
        } catch (const BlowUpError& e) {
            out.abort_time[ic][j] = e.time();
        }
    });
    return out;
}

void judge_uniformity(MomentTable& table, const UniformityOptions& options) {
    table.worst_ratio = 1.0;
    table.ratios_ok = true;
    table.cis_overlap = true;
    table.any_aborted = false;
    for (const auto& r : table.rows) table.any_aborted = table.any_aborted || r.n_aborted > 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        for (std::size_t j = i + 1; j < table.rows.size(); ++j) {
            const auto& a = table.rows[i];
            const auto& b = table.rows[j];
            double ratio = 1.0;
            if (a.mean > 0.0 && b.mean > 0.0)
                ratio = std::max(a.mean / b.mean, b.mean / a.mean);
            else if (a.mean != b.mean)
                ratio = std::numeric_limits<double>::infinity();
            table.worst_ratio = std::max(table.worst_ratio, ratio);
            if (ratio > options.ratio_threshold) table.ratios_ok = false;
            if (options.require_ci_overlap && (a.ci_high < b.ci_low || b.ci_high < a.ci_low)) table.cis_overlap = false;
        }
}

MomentTable moment_bound(const EnsembleSpec& spec, double t, const UniformityOptions& options) {
    if (!(t > 0.0)) throw std::invalid_argument("moment time must be positive");
    spec.validate();
    const std::uint64_t steps = steps_for(t, spec.params.dt);
    const std::size_t n_ic = spec.initial_conditions.size();
    std::vector<double> values(n_ic * spec.n_traj, 0.0);
    std::vector<char> aborted(values.size(), 0);

    detail::parallel_for(values.size(), spec.threads, [&](std::size_t idx) {
        const std::size_t ic = idx / spec.n_traj;
        const std::size_t j = idx % spec.n_traj;
        SpectralField last = spec.initial_conditions[ic];
        const double abort_time = evolve(spec.initial_conditions[ic], spec.params, spec.trajectory_id(ic, j), steps,
                                         [&](std::uint64_t s, const SpectralField& u) {
                                             if (s == steps) last = u;
                                         });
        if (abort_time >= 0.0) {
            aborted[idx] = 1;
            return;
        }
        values[idx] = std::pow(norm_gamma(last, spec.gamma), spec.p);
    });

    MomentTable table;
    for (std::size_t ic = 0; ic < n_ic; ++ic) {
        std::vector<double> used;
        std::size_t n_aborted = 0;
        for (std::size_t j = 0; j < spec.n_traj; ++j) {
            const std::size_t idx = ic * spec.n_traj + j;
            if (aborted[idx])
                ++n_aborted;
            else
                used.push_back(values[idx]);
        }
        MomentRow row;
        row.ic = ic;
        row.initial_norm = norm_gamma(spec.initial_conditions[ic], spec.gamma);
        row.t = t;
        fill_row(row, used, n_aborted);
        table.rows.push_back(row);
    }
    judge_uniformity(table, options);
    return table;
}

MomentTable sup_window_bound(const EnsembleSpec& spec, double t1, double t2, const UniformityOptions& options) {
    if (!(t1 > 0.0 && t2 > t1)) throw std::invalid_argument("sup window needs 0 < t1 < t2");
    spec.validate();
    const double dt = spec.params.dt;
    const auto last_step = static_cast<std::uint64_t>(std::ceil(t2 / dt - 1e-9));
    const std::size_t n_ic = spec.initial_conditions.size();
    std::vector<double> values(n_ic * spec.n_traj, 0.0);
    std::vector<char> aborted(values.size(), 0);

    detail::parallel_for(values.size(), spec.threads, [&](std::size_t idx) {
        const std::size_t ic = idx / spec.n_traj;
        const std::size_t j = idx % spec.n_traj;
        double best = 0.0;
        const double abort_time =
            evolve(spec.initial_conditions[ic], spec.params, spec.trajectory_id(ic, j), last_step,
                   [&](std::uint64_t s, const SpectralField& u) {
                       const double time = static_cast<double>(s) * dt;
                       if (time > t1 && time < t2) best = std::max(best, sup_norm(u));
                   });
        if (abort_time >= 0.0)
            aborted[idx] = 1;
        else
            values[idx] = best;
    });

    MomentTable table;
    for (std::size_t ic = 0; ic < n_ic; ++ic) {
        std::vector<double> used;
        std::size_t n_aborted = 0;
        for (std::size_t j = 0; j < spec.n_traj; ++j) {
            const std::size_t idx = ic * spec.n_traj + j;
            if (aborted[idx])
                ++n_aborted;
            else
                used.push_back(values[idx]);
        }
        MomentRow row;
        row.ic = ic;
        row.initial_norm = norm_gamma(spec.initial_conditions[ic], spec.gamma);
        row.t = t2;
        fill_row(row, used, n_aborted);
        table.rows.push_back(row);
    }
    judge_uniformity(table, options);
    return table;
}

Eigen::VectorXd observables(const SpectralField& u, double gamma) {
    Eigen::VectorXd o(kObservableDim);
    o(0) = norm_gamma(u, gamma);
    for (int i = 1; i < kObservableDim; ++i) {
        const auto slot = static_cast<std::size_t>(i - 1);
        o(i) = slot < u.size() ? u[slot] : 0.0;
    }
    return o;
}

Eigen::MatrixXd observables(const std::vector<SpectralField>& ensemble, double gamma) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ensemble.size()), kObservableDim);
    for (std::size_t i = 0; i < ensemble.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = observables(ensemble[i], gamma);
    return out;
}

LawDistance histogram_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const LawDistanceOptions& options) {
    if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("law distance needs nonempty ensembles");
    if (a.cols() != b.cols()) throw std::invalid_argument("ensembles have different observable dimensions");
    if (options.bins < 1) throw std::invalid_argument("need at least one bin");
    const auto bins = static_cast<std::size_t>(options.bins);
    const double na = static_cast<double>(a.rows());
    const double nb = static_cast<double>(b.rows());
    auto weight = [&](double o0) { return options.weighted ? std::pow(std::abs(o0), options.p) + 1.0 : 1.0; };

    LawDistance out;
    for (Eigen::Index axis = 0; axis < a.cols(); ++axis) {
        const double lo = std::min(a.col(axis).minCoeff(), b.col(axis).minCoeff());
        const double hi = std::max(a.col(axis).maxCoeff(), b.col(axis).maxCoeff());
        if (!(hi > lo)) {
            out.per_axis.push_back(0.0);
            continue;
        }
        const double width = (hi - lo) / static_cast<double>(bins);
        auto bin_of = [&](double v) {
            const auto k = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins) - 1));
        };
        std::vector<double> ha(bins, 0.0), hb(bins, 0.0), vsum(bins, 0.0), vcount(bins, 0.0);
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            const std::size_t k = bin_of(a(r, axis));
            ha[k] += 1.0 / na;
            vsum[k] += weight(a(r, 0));
            vcount[k] += 1.0;
        }
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
            const std::size_t k = bin_of(b(r, axis));
            hb[k] += 1.0 / nb;
            vsum[k] += weight(b(r, 0));
            vcount[k] += 1.0;
        }
        double weighted = 0.0;
        double plain = 0.0;
        for (std::size_t k = 0; k < bins; ++k) {
            const double diff = std::abs(ha[k] - hb[k]);
            if (diff == 0.0) continue;
            double v = 1.0;
            if (options.weighted)
                v = axis == 0 ? weight(lo + (static_cast<double>(k) + 0.5) * width) : vsum[k] / vcount[k];
            weighted += v * diff;
            plain += diff;
        }
        out.per_axis.push_back(weighted);
        out.proxy = std::max(out.proxy, weighted);
        out.plain_tv = std::max(out.plain_tv, plain);

        const double ma = a.col(axis).mean();
        const double mb = b.col(axis).mean();
        const double va = (a.col(axis).array() - ma).square().sum() / std::max(1.0, na - 1.0);
        const double vb = (b.col(axis).array() - mb).square().sum() / std::max(1.0, nb - 1.0);
        const double sd = std::sqrt(0.5 * (va + vb));
        if (sd > 0.0) out.sliced_mean_diff = std::max(out.sliced_mean_diff, std::abs(ma - mb) / sd);
    }
    return out;
}

LawDistance law_distance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b, double gamma,
                         double p, const LawDistanceOptions& options) {
    if (a.empty() || b.empty()) throw std::invalid_argument("law distance needs nonempty ensembles");
    if (a.front().n_modes() != b.front().n_modes()) throw std::invalid_argument("ensembles have different truncations");
    LawDistanceOptions opts = options;
    opts.p = p;
    return histogram_distance(observables(a, gamma), observables(b, gamma), opts);
}

RateFit fit_rate(const std::vector<double>& times, const std::vector<double>& distances,
                 const std::vector<double>& floors, const RateFitOptions& options) {
    if (times.size() != distances.size()) throw std::invalid_argument("times and distances differ in length");
    if (!floors.empty() && floors.size() != times.size()) throw std::invalid_argument("floors have the wrong length");
    RateFit fit;
    if (times.size() < 4) {
        fit.reason = "need at least 4 time points";
        return fit;
    }
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double floor = floors.empty() ? 0.0 : floors[i];
        if (distances[i] > 0.0 && distances[i] > options.floor_factor * floor) {
            ts.push_back(times[i]);
            ys.push_back(std::log(distances[i]));
        }
    }
    fit.n_used = ts.size();
    if (ts.size() < 2) {
        fit.reason = "fewer than 2 points above the statistical floor";
        return fit;
    }
    const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    if (*ymax - *ymin <= 1e-12 * std::max(1.0, std::abs(*ymax))) {
        fit.reason = "distances are constant over the fit window";
        return fit;
    }
    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double denom = n * stt - st * st;
    if (!(denom > 0.0)) {
        fit.reason = "degenerate time window";
        return fit;
    }
    const double slope = (n * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / n;
    fit.identifiable = true;
    fit.lambda = -slope;
    fit.C = std::exp(intercept);
    return fit;
}

std::string MixingReport::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "t,distance,stderr,floor\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        os << times[i] << ',' << distances[i] << ',' << std_errors[i] << ',' << floors[i] << '\n';
    return os.str();
}

std::string MixingReport::summary() const {
    std::ostringstream os;
    os.precision(10);
    os << "identifiable = " << (fit.identifiable ? "true" : "false") << '\n';
    if (!fit.identifiable) os << "reason = " << fit.reason << '\n';
    os << "lambda = " << fit.lambda << '\n';
    os << "lambda_ci_low = " << lambda_ci_low << '\n';
    os << "lambda_ci_high = " << lambda_ci_high << '\n';
    os << "C = " << fit.C << '\n';
    os << "points_used = " << fit.n_used << '\n';
    os << "bootstrap_identifiable = " << n_bootstrap_identifiable << '\n';
    if (!distances.empty()) os << "final_over_first = " << distances.back() / distances.front() << '\n';
    return os.str();
}

MixingReport mixing_report(const EnsembleSpec& spec, const MixingOptions& options) {
    if (spec.initial_conditions.size() < 2) throw std::invalid_argument("mixing needs two initial conditions");
    const EnsembleSamples samples = run_ensemble(spec, options.t_max);
    MixingOptions opts = options;
    opts.distance.p = spec.p;
    return mixing_report(samples, spec.gamma, opts);
}

MixingReport mixing_report(const EnsembleSamples& samples, double gamma, const MixingOptions& options) {
    if (samples.states.size() < 2) throw std::invalid_argument("mixing needs two initial conditions");
    MixingReport rep;
    std::vector<Eigen::MatrixXd> obs_a, obs_b;
    for (std::size_t ti = 1; ti < samples.times.size(); ++ti) {
        obs_a.push_back(observables(samples.at(0, ti), gamma));
        obs_b.push_back(observables(samples.at(1, ti), gamma));
        if (obs_a.back().rows() < 4 || obs_b.back().rows() < 4)
            throw std::invalid_argument("too few completed trajectories for a mixing report");
    }

    auto split = [](const Eigen::MatrixXd& m, int parity) {
        Eigen::MatrixXd out((m.rows() + 1 - parity) / 2, m.cols());
        for (Eigen::Index r = parity, k = 0; r < m.rows(); r += 2, ++k) out.row(k) = m.row(r);
        return out;
    };

    for (std::size_t i = 0; i < obs_a.size(); ++i) {
        rep.times.push_back(samples.times[i + 1]);
        rep.distances.push_back(histogram_distance(obs_a[i], obs_b[i], options.distance).proxy);
        const double fa = histogram_distance(split(obs_a[i], 0), split(obs_a[i], 1), options.distance).proxy;
        const double fb = histogram_distance(split(obs_b[i], 0), split(obs_b[i], 1), options.distance).proxy;
        // Halves hold half the samples, so their distance overstates the floor by ~sqrt(2).
        rep.floors.push_back(0.5 * (fa + fb) / std::sqrt(2.0));
    }
    rep.fit = fit_rate(rep.times, rep.distances, rep.floors, options.fit);

    std::vector<double> lambdas;
    std::vector<std::vector<double>> boot_d(rep.times.size());
    NormalSequence rng(options.bootstrap_seed, 0);
    for (int bidx = 0; bidx < options.n_bootstrap; ++bidx) {
        std::vector<Eigen::Index> ia(static_cast<std::size_t>(obs_a[0].rows())), ib(static_cast<std::size_t>(obs_b[0].rows()));
        for (auto& v : ia) v = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(ia.size()));
        for (auto& v : ib) v = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(ib.size()));
        std::vector<double> d;
        for (std::size_t i = 0; i < obs_a.size(); ++i) {
            Eigen::MatrixXd ra(static_cast<Eigen::Index>(ia.size()), obs_a[i].cols());
            Eigen::MatrixXd rb(static_cast<Eigen::Index>(ib.size()), obs_b[i].cols());
            for (std::size_t r = 0; r < ia.size(); ++r)
                ra.row(static_cast<Eigen::Index>(r)) = obs_a[i].row(std::min(ia[r], obs_a[i].rows() - 1));
            for (std::size_t r = 0; r < ib.size(); ++r)
                rb.row(static_cast<Eigen::Index>(r)) = obs_b[i].row(std::min(ib[r], obs_b[i].rows() - 1));
            d.push_back(histogram_distance(ra, rb, options.distance).proxy);
            boot_d[i].push_back(d.back());
        }
        const RateFit f = fit_rate(rep.times, d, rep.floors, options.fit);
        if (f.identifiable) ++rep.n_bootstrap_identifiable;
        // A replicate without a detectable decay counts as lambda = 0.
        lambdas.push_back(f.identifiable ? f.lambda : 0.0);
    }
    // Bootstrap standard deviation of each distance.
    for (const auto& ds : boot_d) {
        const Summary sm = summarize(ds);
        rep.std_errors.push_back(sm.std_error * std::sqrt(static_cast<double>(ds.size())));
    }

    if (!lambdas.empty()) {
        std::sort(lambdas.begin(), lambdas.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(lambdas.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, lambdas.size() - 1);
            return lambdas[lo] + (pos - static_cast<double>(lo)) * (lambdas[hi] - lambdas[lo]);
        };
        rep.lambda_ci_low = quantile(0.025);
        rep.lambda_ci_high = quantile(0.975);
    }
    if (rep.std_errors.size() != rep.times.size()) rep.std_errors.assign(rep.times.size(), 0.0);
    return rep;
}

}  // namespace sgl
