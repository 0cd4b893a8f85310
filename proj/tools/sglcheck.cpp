// sglcheck: command-line driver for the simulator and the Doeblin toolkit.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sgl/config.hpp"
#include "sgl/doeblin.hpp"
#include "sgl/doeblin_exact.hpp"

namespace fs = std::filesystem;
using namespace sgl;

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Returns nonzero (and prints the violation) when the spectrum is invalid.
int check_spectrum(const RunConfig& cfg) {
    if (const auto v = validate(cfg.spectrum())) {
        std::cerr << "status = invalid_spectrum\n" << v->to_text();
        return 2;
    }
    return 0;
}

int run_simulate(const RunConfig& cfg, const fs::path& out) {
    if (int rc = check_spectrum(cfg)) return rc;
    const SimulationParams params = cfg.simulation_params();
    params.validate();
    std::ostringstream csv;
    csv << cfg.header();
    csv << "trajectory_id,ic,t,norm_0,norm_gamma,sup_norm,coef_0,coef_1,coef_2,coef_3,coef_4,coef_5\n";
    std::uint64_t id = 0;
    for (std::size_t ic = 0; ic < cfg.initial.size(); ++ic) {
        const SpectralField x = cfg.initial[ic].build(cfg.n_modes, cfg.gamma, cfg.ic_seed + ic);
        for (std::size_t j = 0; j < cfg.simulate_traj; ++j, ++id) {
            const Trajectory traj = simulate(x, params, {.trajectory_id = id});
            for (std::size_t i = 0; i < traj.times.size(); ++i) {
                const SpectralField& u = traj.states[i];
                csv << id << ',' << ic << ',' << num(traj.times[i]) << ',' << num(norm_gamma(u, 0.0)) << ','
                    << num(norm_gamma(u, cfg.gamma)) << ',' << num(sup_norm(u));
                for (std::size_t s = 0; s < 6; ++s) csv << ',' << num(s < u.size() ? u[s] : 0.0);
                csv << '\n';
            }
        }
    }
    write_file(out / "trajectories.csv", csv.str());
    std::cout << "status = ok\nfile = " << (out / "trajectories.csv").string() << "\ntrajectories = " << id << '\n';
    return 0;
}

int run_moments(const RunConfig& cfg, const fs::path& out) {
    if (int rc = check_spectrum(cfg)) return rc;
    const EnsembleSpec spec = cfg.ensemble();
    const MomentTable table = moment_bound(spec, cfg.moment_time, {.ratio_threshold = cfg.ratio_threshold});
    std::ostringstream csv;
    csv << cfg.header();
    csv << "ic,initial_norm,t,mean,stderr,ci_low,ci_high,n_used,n_aborted\n";
    for (const auto& r : table.rows)
        csv << r.ic << ',' << num(r.initial_norm) << ',' << num(r.t) << ',' << num(r.mean) << ',' << num(r.std_error)
            << ',' << num(r.ci_low) << ',' << num(r.ci_high) << ',' << r.n_used << ',' << r.n_aborted << '\n';
    write_file(out / "moments.csv", csv.str());
    std::cout << "worst_ratio = " << num(table.worst_ratio) << '\n'
              << "ratios_ok = " << (table.ratios_ok ? "true" : "false") << '\n'
              << "cis_overlap = " << (table.cis_overlap ? "true" : "false") << '\n'
              << "any_aborted = " << (table.any_aborted ? "true" : "false") << '\n'
              << "uniform = " << (table.uniform() ? "true" : "false") << '\n';
    if (!table.uniform()) {
        std::cout << "failures =";
        if (!table.ratios_ok) std::cout << " ratio_threshold";
        if (!table.cis_overlap) std::cout << " ci_overlap";
        if (table.any_aborted) std::cout << " blowup";
        std::cout << '\n';
    }
    return table.uniform() ? 0 : 1;
}

int run_mixing(const RunConfig& cfg, const fs::path& out) {
    if (int rc = check_spectrum(cfg)) return rc;
    EnsembleSpec spec = cfg.ensemble();
    if (spec.initial_conditions.size() < 2) throw ConfigError(0, "mixing needs two initial conditions");
    spec.initial_conditions.erase(spec.initial_conditions.begin() + 2, spec.initial_conditions.end());
    MixingOptions opts;
    opts.t_max = cfg.t_max;
    opts.n_bootstrap = cfg.n_bootstrap;
    opts.distance.bins = cfg.bins;
    const MixingReport rep = mixing_report(spec, opts);
    write_file(out / "mixing.csv", cfg.header() + rep.to_csv());
    write_file(out / "mixing_summary.txt", cfg.header() + rep.summary());
    std::cout << rep.summary();
    const bool ok = rep.lambda_ci_low > 0.0;
    if (!ok) std::cout << "failures = lambda_ci_low\n";
    return ok ? 0 : 1;
}

int run_doeblin(const RunConfig& cfg, const fs::path& out) {
    if (cfg.kernel_path.empty()) throw ConfigError(0, "[doeblin] kernel is required");
    std::ifstream in(cfg.kernel_path);
    if (!in) throw ConfigError(0, "cannot open kernel file '" + cfg.kernel_path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    const doeblin::FiniteKernel p = doeblin::FiniteKernel::parse_text(text.str());
    const int n = p.n();

    doeblin::StateSet K = cfg.K;
    if (K.empty())
        for (int i = 0; i < n; ++i) K.push_back(i);
    K = doeblin::normalize_set(K, n);

    std::ostringstream rep;
    std::vector<std::string> failures;
    auto cert = doeblin::minorization(p, K, cfg.m);
    rep << "[certificate]\n";
    if (!cert) {
        rep << "status = none\n";
        failures.push_back("minorization");
    } else {
        cert->delta_prime = doeblin::condition_b(p, K);
        rep << cert->to_text();
        if (!doeblin::validate_certificate(p, *cert)) failures.push_back("certificate_validation");
    }

    rep << "\n[invariant_measure]\n";
    try {
        const Eigen::VectorXd mu = doeblin::invariant_measure(p);
        rep << "mu =";
        for (Eigen::Index i = 0; i < mu.size(); ++i) rep << (i ? ", " : " ") << num(mu(i));
        rep << '\n';
    } catch (const doeblin::NonUniqueStationary& e) {
        rep << "status = not_unique\n";
        failures.push_back("invariant_measure");
    }

    if (cert && cfg.m == 1 && *cert->delta_prime > 0.0 && failures.empty()) {
        // Exact rational re-check of the geometric bound on the decimal kernel.
        const auto pr = doeblin::exact::parse_kernel_text(text.str());
        const auto eps = doeblin::exact::minorization_delta(pr, K, 1) * doeblin::exact::condition_b(pr, K);
        const auto g = doeblin::exact::geometric_bound_check(pr, eps, cfg.horizon);
        rep << "\n[geometric_bound]\n";
        rep << "epsilon = " << num(static_cast<double>(eps)) << '\n';
        rep << "horizon = " << cfg.horizon << '\n';
        rep << "holds = " << (g.holds ? "true" : "false") << '\n';
        if (!g.holds) failures.push_back("geometric_bound");
    }

    rep << "\n[small_set_search]\n";
    Eigen::VectorXd mu0;
    if (cfg.mu0 == "uniform") {
        mu0 = Eigen::VectorXd::Constant(n, 1.0 / n);
    } else {
        std::istringstream items(cfg.mu0);
        std::vector<double> w;
        std::string tok;
        while (std::getline(items, tok, ',')) w.push_back(std::stod(tok));
        if (static_cast<int>(w.size()) != n) throw ConfigError(0, "mu0 needs one weight per state");
        mu0 = Eigen::Map<Eigen::VectorXd>(w.data(), n);
    }
    if (const auto s = doeblin::small_set_search(p, mu0)) {
        rep << "level = " << s->level << '\n' << s->certificate.to_text();
        rep << "density_bound = " << num(s->density_bound) << '\n';
        rep << "v_cell_mass = " << num(s->v_cell_mass) << '\n';
    } else {
        // The construction is sufficient, not necessary; no certificate is not a failure.
        rep << "status = none\n";
    }

    rep << "\nstatus = " << (failures.empty() ? "ok" : "failed") << '\n';
    if (!failures.empty()) {
        rep << "failures =";
        for (const auto& f : failures) rep << ' ' << f;
        rep << '\n';
    }
    write_file(out / "doeblin.txt", cfg.header() + rep.str());
    std::cout << rep.str();
    return failures.empty() ? 0 : 1;
}

int run_odecheck(const RunConfig& cfg, const fs::path& out) {
    const std::vector<StepForcing> forcings{{{0.0}, {0.0}}, {{0.0, 0.25}, {1.0, 0.0}}};
    std::ostringstream csv;
    csv << cfg.header();
    csv << "q,c,y0,t,forcing,y,literal_bound,corrected_bound,literal_holds,corrected_holds\n";
    std::size_t total = 0, corrected = 0, literal = 0;
    for (int q : cfg.ode_q)
        for (double c : cfg.ode_c)
            for (double y0 : cfg.ode_y0)
                for (double t : cfg.ode_t)
                    for (std::size_t fi = 0; fi < forcings.size(); ++fi) {
                        const OdeComparison r = ode_comparison(q, c, y0, forcings[fi], t);
                        ++total;
                        corrected += r.corrected_holds;
                        literal += r.literal_holds;
                        csv << q << ',' << num(c) << ',' << num(y0) << ',' << num(t) << ',' << fi << ',' << num(r.y)
                            << ',' << num(r.literal_bound) << ',' << num(r.corrected_bound) << ','
                            << r.literal_holds << ',' << r.corrected_holds << '\n';
                    }
    const OdeComparison w = ode_comparison(3, 1.0, 10.0, StepForcing{}, 0.5);
    write_file(out / "odecheck.csv", csv.str());
    std::cout << "instances = " << total << '\n'
              << "corrected_holds = " << corrected << '\n'
              << "literal_holds = " << literal << '\n'
              << "witness_y = " << num(w.y) << '\n'
              << "witness_literal_bound = " << num(w.literal_bound) << '\n'
              << "witness_literal = " << (w.literal_holds ? "holds" : "fails") << '\n'
              << "witness_corrected_bound = " << num(w.corrected_bound) << '\n'
              << "witness_corrected = " << (w.corrected_holds ? "holds" : "fails") << '\n';
    const bool ok = corrected == total && w.corrected_holds;
    if (!ok) std::cout << "failures = corrected_bound\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Ginzburg-Landau simulator and Doeblin checks"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "overrides [model] seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    const std::vector<std::pair<const char*, int (*)(const RunConfig&, const fs::path&)>> commands{
        {"simulate", run_simulate}, {"moments", run_moments}, {"mixing", run_mixing},
        {"doeblin", run_doeblin},   {"odecheck", run_odecheck}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        cfg.threads = threads;
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(cfg, fs::path(out_dir));
    } catch (const ConfigError& e) {
        std::cerr << "status = config_error\nline = " << e.line() << "\nmessage = " << e.what() << '\n';
        return 2;
    } catch (const BlowUpError& e) {
        std::cerr << "status = blowup\ntime = " << num(e.time()) << "\nnorm = " << num(e.norm()) << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "status = error\nmessage = " << e.what() << '\n';
        return 2;
    }
    return 2;
}
