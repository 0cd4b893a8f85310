// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion.
//
//   acceptance [--out DIR] [--only 1,2,...] [--known-fail 6,7] [--threads N]
//
// Exit status is nonzero if any criterion fails that is not listed in
// --known-fail, so documented red criteria stay visible without breaking ctest.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "sgl/config.hpp"
#include "sgl/doeblin.hpp"
#include "sgl/doeblin_exact.hpp"
#include "sgl/rng.hpp"

namespace fs = std::filesystem;
using namespace sgl;
namespace db = sgl::doeblin;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string num(double x, int precision = 17) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seq_(seed, 0) {}
    double uniform() { return seq_.uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }

private:
    NormalSequence seq_;
};

Eigen::MatrixXd random_kernel(Rng& r, int n, bool positive) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double w = -std::log(r.uniform());
            if (!positive && r.uniform() < 0.3) w = 0.0;
            m(i, j) = w;
        }
        if (m.row(i).sum() == 0.0) m(i, r.integer(0, n - 1)) = 1.0;
        m.row(i) /= m.row(i).sum();
    }
    return m;
}

db::StateSet random_subset(Rng& r, int n) {
    db::StateSet s;
    for (int i = 0; i < n; ++i)
        if (r.uniform() < 0.5) s.push_back(i);
    if (s.empty()) s.push_back(r.integer(0, n - 1));
    return s;
}

Eigen::VectorXd random_probability(Rng& r, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = -std::log(r.uniform());
    return v / v.sum();
}

// ---- criterion 1 -------------------------------------------------------------

std::string ou_report() {
    SimulationParams p = SimulationParams::default_model();
    p.poly.reset();
    p.seed = 20010327;
    const SpectralField x = scaled_random_field(32, 0.0, 1.0, 5);
    const std::size_t n = 10000;
    const std::size_t slots = x.size();
    std::vector<double> s1(slots, 0.0), s2(slots, 0.0), s3(slots, 0.0), s4(slots, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const Trajectory t = simulate(x, p, {.trajectory_id = j});
        const SpectralField& u = t.states.back();
        for (std::size_t s = 0; s < slots; ++s) {
            const double v = u[s];
            s1[s] += v;
            s2[s] += v * v;
            s3[s] += v * v * v;
            s4[s] += v * v * v * v;
        }
    }
    std::ostringstream csv;
    csv << "# linear model, N = 32, h = 1/256, t = 1, n = " << n << ", seed = " << p.seed << '\n';
    csv << "slot,k,x,mean,mean_target,mean_se,var,var_target,var_se\n";
    const double nn = static_cast<double>(n);
    for (std::size_t s = 0; s < slots; ++s) {
        const int k = SpectralField::mode_of_slot(s);
        const double l = mode_eigenvalue(k);
        const double qk = p.spectrum.q[static_cast<std::size_t>(k)];
        const double mean = s1[s] / nn;
        const double var = s2[s] / nn - mean * mean;
        // Central fourth moment for the standard error of the variance.
        const double m4 = s4[s] / nn - 4.0 * mean * s3[s] / nn + 6.0 * mean * mean * s2[s] / nn - 3.0 * std::pow(mean, 4);
        csv << s << ',' << k << ',' << num(x[s]) << ',' << num(mean) << ',' << num(std::exp(-l) * x[s]) << ','
            << num(std::sqrt(std::max(var, 0.0) / nn)) << ',' << num(var) << ','
            << num(qk * qk * -std::expm1(-2.0 * l) / (2.0 * l)) << ','
            << num(std::sqrt(std::max(m4 - var * var, 0.0) / nn)) << '\n';
    }
    return csv.str();
}

Verdict judge_ou(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    int forced = 0, bad = 0;
    double worst = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 's') continue;
        std::vector<double> f;
        std::istringstream row(line);
        std::string tok;
        while (std::getline(row, tok, ',')) f.push_back(std::stod(tok));
        const double mean = f[3], mean_t = f[4], mean_se = f[5], var = f[6], var_t = f[7], var_se = f[8];
        if (var_t == 0.0) {
            // Unforced: the mode is deterministic.
            if (var > 1e-28 || std::abs(mean - mean_t) > 1e-14 * (1.0 + std::abs(mean_t))) ++bad;
            continue;
        }
        ++forced;
        const double zm = std::abs(mean - mean_t) / mean_se;
        const double zv = std::abs(var - var_t) / var_se;
        worst = std::max({worst, zm, zv});
        if (zm > 4.0 || zv > 4.0) ++bad;
    }
    return {bad == 0 && forced == 58,
            "forced slots " + std::to_string(forced) + ", worst |z| " + num(worst, 3) + ", violations " +
                std::to_string(bad)};
}

Verdict criterion1(const fs::path& out) {
    const std::string csv = ou_report();
    write_file(out / "c1_ou.csv", csv);
    return judge_ou(csv);
}

// ---- criterion 2 -------------------------------------------------------------

Verdict criterion2() {
    Rng r(2);
    int instances = 0, attempts = 0, bad_contraction = 0, bad_lower = 0;
    double worst_gap = -1.0;
    while (instances < 10000) {
        ++attempts;
        const int n = r.integer(2, 6);
        const db::FiniteKernel p(random_kernel(r, n, attempts % 3 != 0));
        const db::StateSet K = random_subset(r, n);
        auto cert = db::minorization(p, K, 1);
        if (!cert) continue;
        const double b = db::condition_b(p, K);
        if (!(b > 0.0)) continue;
        cert->delta_prime = b;
        if (!db::validate_certificate(p, *cert)) {
            ++bad_contraction;
            continue;
        }
        ++instances;
        const db::ContractionReport rep = db::contraction_check(p, *cert, 4, static_cast<std::uint64_t>(attempts));
        const double ratio = std::max(rep.worst_dirac_ratio, rep.worst_random_ratio);
        worst_gap = std::max(worst_gap, ratio - rep.factor_bound);
        if (ratio > rep.factor_bound + 1e-12) ++bad_contraction;
        if (rep.lower_bound_slack < -1e-12) ++bad_lower;
    }
    return {bad_contraction == 0 && bad_lower == 0,
            std::to_string(instances) + " kernels, max(ratio - (1 - delta delta')) = " + num(worst_gap, 3) +
                ", contraction violations " + std::to_string(bad_contraction) + ", lower-bound violations " +
                std::to_string(bad_lower)};
}

// ---- criterion 3 -------------------------------------------------------------

Verdict criterion3() {
    Rng r(3);
    int instances = 0, candidates = 0, accepted = 0;
    while (instances < 1000) {
        const int n = r.integer(2, 6);
        const db::FiniteKernel p(random_kernel(r, n, instances % 2 == 0));
        const db::StateSet K = random_subset(r, n);
        const int m = r.integer(1, 3);
        const auto cert = db::minorization(p, K, m);
        if (!cert) continue;
        ++instances;
        for (int c = 0; c < 50; ++c) {
            db::SmallSetCertificate rival = *cert;
            // Half the rivals perturb the optimal nu, half are arbitrary.
            if (c % 2 == 0) {
                Eigen::VectorXd noise = random_probability(r, n);
                const double mix = 0.2 * r.uniform();
                rival.nu = (1.0 - mix) * cert->nu + mix * noise;
            } else {
                rival.nu = random_probability(r, n);
            }
            rival.delta = std::min(1.0, cert->delta * (1.0 + 1e-9 + 0.5 * r.uniform()));
            if (!(rival.delta > cert->delta)) continue;
            ++candidates;
            if (db::validate_certificate(p, rival, 0.0)) ++accepted;
        }
    }
    return {accepted == 0, std::to_string(instances) + " instances, " + std::to_string(candidates) +
                               " rival (delta, nu) pairs, accepted " + std::to_string(accepted)};
}

// ---- criterion 4 -------------------------------------------------------------

Verdict criterion4() {
    Rng r(4);
    int found = 0, bad = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 1000; ++i) {
        const db::FiniteKernel p(random_kernel(r, 5, true));
        const Eigen::VectorXd mu0 = random_probability(r, 5);
        const auto s = db::small_set_search(p, mu0);
        if (!s) continue;
        ++found;
        const bool valid = db::validate_certificate(p, s->certificate);
        const bool est = s->density_bound >= s->v_cell_mass / 8.0 - 1e-12;
        worst_ratio = std::min(worst_ratio, s->density_bound / (s->v_cell_mass / 8.0));
        if (!valid || !est) ++bad;
    }
    return {bad == 0 && found > 0, std::to_string(found) + "/1000 certificates, failures " + std::to_string(bad) +
                                       ", min density / (mu0(V)/8) = " + num(worst_ratio, 4)};
}

// ---- criterion 5 -------------------------------------------------------------

Verdict criterion5(const fs::path& out) {
    const std::vector<StepForcing> forcings{{{0.0}, {0.0}}, {{0.0, 0.25}, {1.0, 0.0}}, {{0.0, 0.05, 1.0}, {0.0, 3.0, 0.5}}};
    std::ostringstream csv;
    csv << "q,c,y0,t,forcing,y,literal_bound,corrected_bound,literal_holds,corrected_holds\n";
    int total = 0, corrected = 0, literal = 0;
    for (int q : {3, 5, 7})
        for (double c : {0.5, 1.0, 2.0})
            for (double y0 : {0.1, 1.0, 10.0})
                for (double t : {0.1, 0.5, 2.0})
                    for (std::size_t fi = 0; fi < forcings.size(); ++fi) {
                        const OdeComparison r = ode_comparison(q, c, y0, forcings[fi], t, 1e-8);
                        ++total;
                        corrected += r.corrected_holds;
                        literal += r.literal_holds;
                        csv << q << ',' << num(c) << ',' << num(y0) << ',' << num(t) << ',' << fi << ',' << num(r.y)
                            << ',' << num(r.literal_bound) << ',' << num(r.corrected_bound) << ',' << r.literal_holds
                            << ',' << r.corrected_holds << '\n';
                    }
    write_file(out / "c5_ode.csv", csv.str());
    const OdeComparison w = ode_comparison(3, 1.0, 10.0, StepForcing{}, 0.5, 1e-8);
    const bool witness = !w.literal_holds && w.corrected_holds && std::abs(w.y - 0.99504) < 1e-5 &&
                         std::abs(w.literal_bound - 0.8165) < 1e-4;
    return {corrected == total && witness,
            "corrected " + std::to_string(corrected) + "/" + std::to_string(total) + ", literal " +
                std::to_string(literal) + "/" + std::to_string(total) + "; witness y = " + num(w.y, 5) +
                ", literal " + num(w.literal_bound, 5) + (w.literal_holds ? " holds" : " fails")};
}

// ---- criterion 6 -------------------------------------------------------------

RunConfig default_run(int threads) {
    RunConfig cfg;  // N = 32, h = 1/256, P = u^3 - u, q_k = k^-4 above k = 3
    cfg.threads = threads;
    return cfg;
}

std::pair<std::string, MomentTable> moments_run(int threads) {
    RunConfig cfg = default_run(threads);
    cfg.n_traj = 1000;
    cfg.moment_time = 1.0;
    const MomentTable table = moment_bound(cfg.ensemble(), cfg.moment_time, {.ratio_threshold = cfg.ratio_threshold});
    std::ostringstream csv;
    csv << cfg.header() << "ic,initial_norm,t,mean,stderr,ci_low,ci_high,n_used,n_aborted\n";
    for (const auto& r : table.rows)
        csv << r.ic << ',' << num(r.initial_norm) << ',' << num(r.t) << ',' << num(r.mean) << ',' << num(r.std_error)
            << ',' << num(r.ci_low) << ',' << num(r.ci_high) << ',' << r.n_used << ',' << r.n_aborted << '\n';
    return {csv.str(), table};
}

Verdict criterion6(const fs::path& out, int threads) {
    const auto [csv, table] = moments_run(threads);
    write_file(out / "c6_moments.csv", csv);
    std::ostringstream d;
    d << "E||Phi_1||_1^2 =";
    for (const auto& r : table.rows) d << ' ' << num(r.mean, 4) << " [" << num(r.ci_low, 4) << ", " << num(r.ci_high, 4) << ']';
    d << "; worst ratio " << num(table.worst_ratio, 4) << (table.ratios_ok ? " ok" : " too large") << ", CIs "
      << (table.cis_overlap ? "overlap" : "do not overlap");
    if (table.any_aborted) d << ", blow-ups present";
    return {table.uniform(), d.str()};
}

// ---- criterion 7 -------------------------------------------------------------

std::pair<std::string, MixingReport> mixing_run(int threads) {
    RunConfig cfg = default_run(threads);
    cfg.initial = {{"zero"}, {"scaled-random:100"}};
    cfg.n_traj = 2000;
    cfg.t_max = 10;
    EnsembleSpec spec = cfg.ensemble();
    MixingOptions opts;
    opts.t_max = cfg.t_max;
    opts.n_bootstrap = cfg.n_bootstrap;
    opts.distance.bins = cfg.bins;
    const MixingReport rep = mixing_report(spec, opts);
    return {cfg.header() + rep.to_csv() + "# summary\n" + rep.summary(), rep};
}

Verdict criterion7(const fs::path& out, int threads) {
    const auto [text, rep] = mixing_run(threads);
    write_file(out / "c7_mixing.csv", text);
    const double ratio = rep.distances.back() / rep.distances.front();
    std::ostringstream d;
    d << "lambda = " << num(rep.fit.lambda, 4) << " CI [" << num(rep.lambda_ci_low, 4) << ", "
      << num(rep.lambda_ci_high, 4) << "], d(1) = " << num(rep.distances.front(), 4)
      << ", d(10) = " << num(rep.distances.back(), 4) << ", d(10)/d(1) = " << num(ratio, 4);
    if (!rep.fit.identifiable) d << " (" << rep.fit.reason << ")";
    return {rep.lambda_ci_low > 0.0 && ratio < 0.1, d.str()};
}

// ---- criterion 8 -------------------------------------------------------------

Verdict criterion8() {
    namespace ex = db::exact;
    const auto p = ex::parse_kernel_text("2\n0.9 0.1\n0.2 0.8\n");
    const std::vector<int> K{0, 1};
    const ex::Rational eps = ex::minorization_delta(p, K, 1) * ex::condition_b(p, K);
    const auto rep = ex::geometric_bound_check(p, eps, 50);
    ex::Rational worst_ratio = 0;
    for (std::size_t n = 0; n < rep.distances.size(); ++n)
        worst_ratio = std::max(worst_ratio, ex::Rational(rep.distances[n] / rep.bounds[n]));
    return {rep.holds && eps == ex::Rational(3, 10),
            "epsilon = " + eps.str() + ", n = 0..50, max distance/bound = " + num(static_cast<double>(worst_ratio), 6)};
}

// ---- criterion 9 -------------------------------------------------------------

Verdict criterion9(const fs::path& out, int threads, const std::set<int>& ran) {
    const fs::path a = out, b = out / "rerun";
    std::vector<std::string> diffs;
    auto compare = [&](const std::string& name, const std::string& rerun) {
        if (!fs::exists(a / name)) {
            diffs.push_back(name + " missing");
            return;
        }
        write_file(b / name, rerun);
        if (read_file(a / name) != read_file(b / name)) diffs.push_back(name);
    };
    // First runs come from criteria 1, 6, 7 when they were selected; produce them otherwise.
    if (!ran.count(1)) write_file(a / "c1_ou.csv", ou_report());
    if (!ran.count(6)) write_file(a / "c6_moments.csv", moments_run(threads).first);
    if (!ran.count(7)) write_file(a / "c7_mixing.csv", mixing_run(threads).first);
    compare("c1_ou.csv", ou_report());
    compare("c6_moments.csv", moments_run(threads).first);
    compare("c7_mixing.csv", mixing_run(threads).first);
    std::string d = diffs.empty() ? "c1_ou.csv, c6_moments.csv, c7_mixing.csv bitwise identical" : "differ:";
    for (const auto& x : diffs) d += ' ' + x;
    return {diffs.empty(), d};
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.insert(std::stoi(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string out_dir = "acceptance_out", only, known;
    int threads = 1;
    app.add_option("--out", out_dir);
    app.add_option("--only", only, "comma-separated criteria to run");
    app.add_option("--known-fail", known, "criteria whose failure is documented and does not fail the run");
    app.add_option("--threads", threads)->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const fs::path out(out_dir);
    fs::create_directories(out);
    std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9} : parse_list(only);
    const std::set<int> known_fail = parse_list(known);

    // Runtime limits in seconds.
    const std::map<int, double> limit{{1, 60}, {2, 60}, {3, 60}, {4, 60}, {5, 60}, {6, 600}, {7, 900}, {8, 1}, {9, 1e9}};
    const std::map<int, std::function<Verdict()>> run{
        {1, [&] { return criterion1(out); }},
        {2, criterion2},
        {3, criterion3},
        {4, criterion4},
        {5, [&] { return criterion5(out); }},
        {6, [&] { return criterion6(out, threads); }},
        {7, [&] { return criterion7(out, threads); }},
        {8, criterion8},
        {9, [&] { return criterion9(out, threads, selected); }},
    };

    int unexpected = 0;
    for (int c : selected) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run.at(c)();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > limit.at(c)) {
            v.pass = false;
            v.detail += "; runtime limit exceeded";
        }
        std::cout << "criterion " << c << ": " << (v.pass ? "PASS" : "FAIL") << " (" << num(secs, 3) << " s) "
                  << v.detail;
        if (!v.pass && known_fail.count(c)) std::cout << " [documented failure]";
        std::cout << std::endl;
        if (!v.pass && !known_fail.count(c)) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
