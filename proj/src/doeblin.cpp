#include "sgl/doeblin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <istream>
#include <map>
#include <sstream>

#include "sgl/rng.hpp"

namespace sgl::doeblin {

namespace {

constexpr double kRowSumTolerance = 1e-12;

std::string format_number(double x) {
    std::ostringstream os;
    os.precision(15);
    os << x;
    return os.str();
}

std::string join_indices(const StateSet& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out;
}

Eigen::VectorXd random_probability(NormalSequence& rng, int n) {
    Eigen::VectorXd v(n);
    // Mix dense and sparse draws so near-extremal pairs show up.
    const bool sparse = rng.uniform() < 0.3;
    for (int i = 0; i < n; ++i) {
        double e = -std::log(rng.uniform());
        if (sparse && rng.uniform() < 0.5) e = 0.0;
        v(i) = e;
    }
    if (v.sum() == 0.0) v(static_cast<int>(rng.uniform() * n) % n) = 1.0;
    return v / v.sum();
}

}  // namespace

FiniteKernel::FiniteKernel(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
    if (rows_.rows() == 0 || rows_.rows() != rows_.cols()) throw std::invalid_argument("kernel must be square and nonempty");
    for (int x = 0; x < rows_.rows(); ++x) {
        double sum = 0.0;
        for (int y = 0; y < rows_.cols(); ++y) {
            const double v = rows_(x, y);
            if (!std::isfinite(v) || v < 0.0)
                throw std::invalid_argument("kernel entry (" + std::to_string(x) + ", " + std::to_string(y) +
                                            ") is negative or not finite");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw std::invalid_argument("kernel row " + std::to_string(x) + " sums to " + format_number(sum));
    }
}

Eigen::MatrixXd FiniteKernel::power(int m) const {
    if (m < 0) throw std::invalid_argument("kernel power must be >= 0");
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n(), n());
    for (int i = 0; i < m; ++i) out = out * rows_;
    return out;
}

FiniteKernel FiniteKernel::parse(std::istream& in) {
    int n = 0;
    if (!(in >> n) || n <= 0) throw std::invalid_argument("kernel file: first token must be a positive state count");
    Eigen::MatrixXd m(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            if (!(in >> m(x, y)))
                throw std::invalid_argument("kernel file: expected " + std::to_string(n * n) + " entries, row " +
                                            std::to_string(x) + " is short");
    std::string extra;
    if (in >> extra) throw std::invalid_argument("kernel file: trailing data '" + extra + "'");
    return FiniteKernel(std::move(m));
}

FiniteKernel FiniteKernel::parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

std::string FiniteKernel::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << n() << '\n';
    for (int x = 0; x < n(); ++x) {
        for (int y = 0; y < n(); ++y) os << (y ? " " : "") << rows_(x, y);
        os << '\n';
    }
    return os.str();
}

std::string SmallSetCertificate::to_text() const {
    std::ostringstream os;
    os << "K = " << join_indices(K) << '\n';
    os << "m = " << m << '\n';
    os << "delta = " << format_number(delta) << '\n';
    os << "nu = ";
    for (int i = 0; i < nu.size(); ++i) os << (i ? ", " : "") << format_number(nu(i));
    os << '\n';
    if (delta_prime) os << "delta_prime = " << format_number(*delta_prime) << '\n';
    return os.str();
}

StateSet normalize_set(StateSet s, int n) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    if (s.empty()) throw std::invalid_argument("state set must be nonempty");
    if (s.front() < 0 || s.back() >= n) throw std::invalid_argument("state index out of range");
    return s;
}

bool validate_certificate(const FiniteKernel& p, const SmallSetCertificate& cert, double tolerance) {
    const int n = p.n();
    if (cert.m < 1 || !(cert.delta > 0.0) || cert.delta > 1.0 + tolerance) return false;
    if (cert.nu.size() != n) return false;
    if ((cert.nu.array() < 0.0).any() || std::abs(cert.nu.sum() - 1.0) > 1e-9) return false;
    if (cert.K.empty() || cert.K.front() < 0 || cert.K.back() >= n) return false;
    const Eigen::MatrixXd pm = p.power(cert.m);
    for (int x : cert.K)
        for (int y = 0; y < n; ++y)
            if (pm(x, y) < cert.delta * cert.nu(y) - tolerance) return false;
    if (cert.delta_prime) {
        if (!(*cert.delta_prime > 0.0)) return false;
        if (condition_b(p, cert.K) < *cert.delta_prime - tolerance) return false;
    }
    return true;
}

std::optional<SmallSetCertificate> minorization(const FiniteKernel& p, const StateSet& K_in, int m) {
    if (m < 1) throw std::invalid_argument("minorization needs m >= 1");
    const StateSet K = normalize_set(K_in, p.n());
    const Eigen::MatrixXd pm = p.power(m);
    Eigen::VectorXd colmin(p.n());
    for (int y = 0; y < p.n(); ++y) {
        double v = pm(K.front(), y);
        for (int x : K) v = std::min(v, pm(x, y));
        colmin(y) = v;
    }
    const double delta = colmin.sum();
    if (!(delta > 0.0)) return std::nullopt;
    SmallSetCertificate cert;
    cert.K = K;
    cert.m = m;
    cert.delta = std::min(delta, 1.0);
    cert.nu = colmin / delta;
    return cert;
}

double condition_b(const FiniteKernel& p, const StateSet& K_in) {
    const StateSet K = normalize_set(K_in, p.n());
    double best = std::numeric_limits<double>::infinity();
    for (int x = 0; x < p.n(); ++x) {
        double mass = 0.0;
        for (int y : K) mass += p(x, y);
        best = std::min(best, mass);
    }
    return std::min(best, 1.0);
}

double variation_norm(const Eigen::VectorXd& mu) { return mu.cwiseAbs().sum(); }

double weighted_variation_norm(const Eigen::VectorXd& mu, const Eigen::VectorXd& V) {
    if (V.size() != mu.size()) throw std::invalid_argument("weight and measure sizes differ");
    return (V.array() * mu.array().abs()).sum();
}

ContractionReport contraction_check(const FiniteKernel& p, const SmallSetCertificate& cert, int n_random_pairs,
                                    std::uint64_t seed) {
    if (cert.m != 1) throw std::invalid_argument("contraction_check needs a one-step certificate");
    if (!cert.delta_prime) throw std::invalid_argument("contraction_check needs delta_prime");
    if (!validate_certificate(p, cert)) throw std::invalid_argument("certificate does not validate");

    const int n = p.n();
    const double eps = cert.delta * *cert.delta_prime;
    const Eigen::MatrixXd p2 = p.power(2);
    ContractionReport rep;
    rep.factor_bound = 1.0 - eps;

    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
            rep.worst_dirac_ratio = std::max(rep.worst_dirac_ratio, 0.5 * (p2.row(x) - p2.row(y)).cwiseAbs().sum());

    NormalSequence rng(seed, 0);
    for (int i = 0; i < n_random_pairs; ++i) {
        const Eigen::VectorXd mu = random_probability(rng, n);
        const Eigen::VectorXd nu = random_probability(rng, n);
        // Re-center so rounding in the normalizations cannot leave net mass in mu - nu.
        Eigen::VectorXd d = mu - nu;
        d.array() -= d.sum() / n;
        const double before = variation_norm(d);
        if (before == 0.0) continue;
        const Eigen::VectorXd diff = p2.transpose() * d;
        rep.worst_random_ratio = std::max(rep.worst_random_ratio, variation_norm(diff) / before);
    }

    rep.lower_bound_slack = std::numeric_limits<double>::infinity();
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) rep.lower_bound_slack = std::min(rep.lower_bound_slack, p2(x, y) - eps * cert.nu(y));

    rep.contraction_holds = std::max(rep.worst_dirac_ratio, rep.worst_random_ratio) <= rep.factor_bound + 1e-12;
    rep.lower_bound_holds = rep.lower_bound_slack >= -kCertificateTolerance;
    return rep;
}

Eigen::VectorXd invariant_measure(const FiniteKernel& p) {
    const int n = p.n();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - p.matrix().transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    if (lu.rank() != n - 1)
        throw NonUniqueStationary("stationary distribution is not unique (rank of I - P^T is " +
                                  std::to_string(lu.rank()) + ", expected " + std::to_string(n - 1) + ")");
    Eigen::MatrixXd aug(n + 1, n);
    aug.topRows(n) = a;
    aug.row(n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    Eigen::VectorXd mu = aug.colPivHouseholderQr().solve(rhs);
    // One power-iteration polish step; it keeps the solution on the simplex.
    mu = (p.matrix().transpose() * mu).eval();
    mu /= mu.sum();
    const double residual = (p.matrix().transpose() * mu - mu).cwiseAbs().maxCoeff();
    if (residual > 1e-12) throw NonUniqueStationary("stationary solve residual " + format_number(residual));
    return mu;
}

GeometricReport geometric_bound_check(const FiniteKernel& p, const SmallSetCertificate& cert, int horizon) {
    if (!cert.delta_prime) throw std::invalid_argument("geometric bound needs delta_prime");
    return geometric_bound_check(p, cert.delta * *cert.delta_prime, horizon);
}

GeometricReport geometric_bound_check(const FiniteKernel& p, double epsilon, int horizon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("delta delta' must lie in (0, 1)");
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    const Eigen::VectorXd mu_star = invariant_measure(p);
    GeometricReport rep;
    rep.horizon = horizon;
    rep.epsilon = epsilon;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd pn = Eigen::MatrixXd::Identity(p.n(), p.n());
    for (int n = 0; n <= horizon; ++n) {
        double worst = 0.0;
        for (int x = 0; x < p.n(); ++x)
            worst = std::max(worst, (pn.row(x).transpose() - mu_star).cwiseAbs().sum());
        const double bound = 2.0 * std::pow(1.0 - epsilon, n / 2);
        rep.distances.push_back(worst);
        rep.bounds.push_back(bound);
        rep.worst_excess = std::max(rep.worst_excess, worst - bound);
        pn = pn * p.matrix();
    }
    rep.holds = rep.worst_excess <= 1e-12;
    return rep;
}

Partition trivial_partition(int n) { return Partition(static_cast<std::size_t>(n), 0); }

Partition singleton_partition(int n) {
    Partition out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
    return out;
}

std::vector<Partition> ball_partitions(const Eigen::MatrixXd& distances, const std::vector<int>& centers,
                                       const std::vector<double>& radii) {
    const int n = static_cast<int>(distances.rows());
    if (distances.cols() != n) throw std::invalid_argument("distance matrix must be square");
    std::vector<Partition> levels{trivial_partition(n)};
    std::vector<std::vector<char>> signature(static_cast<std::size_t>(n));
    const std::size_t depth = std::max(centers.size(), radii.size());
    for (std::size_t level = 1; level <= depth; ++level) {
        for (auto& sig : signature) sig.clear();
        for (std::size_t i = 0; i < std::min(level, centers.size()); ++i)
            for (std::size_t j = 0; j < std::min(level, radii.size()); ++j)
                for (int x = 0; x < n; ++x)
                    signature[static_cast<std::size_t>(x)].push_back(distances(centers[i], x) < radii[j] ? 1 : 0);
        std::map<std::vector<char>, int> label_of;
        Partition part(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x) {
            auto [it, inserted] = label_of.emplace(signature[static_cast<std::size_t>(x)],
                                                   static_cast<int>(label_of.size()));
            part[static_cast<std::size_t>(x)] = it->second;
        }
        levels.push_back(std::move(part));
    }
    const auto& last = levels.back();
    if (static_cast<int>(*std::max_element(last.begin(), last.end())) + 1 < n) levels.push_back(singleton_partition(n));
    return levels;
}

std::optional<SmallSetConstruction> small_set_search_level(const FiniteKernel& p, const Eigen::VectorXd& mu0,
                                                           const Partition& partition) {
    const int n = p.n();
    if (mu0.size() != n) throw std::invalid_argument("reference measure has the wrong size");
    if ((mu0.array() <= 0.0).any()) throw std::invalid_argument("reference measure must be strictly positive");
    if (std::abs(mu0.sum() - 1.0) > 1e-9) throw std::invalid_argument("reference measure must sum to 1");
    if (static_cast<int>(partition.size()) != n) throw std::invalid_argument("partition has the wrong size");

    int n_cells = 0;
    for (int label : partition) {
        if (label < 0) throw std::invalid_argument("partition labels must be >= 0");
        n_cells = std::max(n_cells, label + 1);
    }
    std::vector<StateSet> cells(static_cast<std::size_t>(n_cells));
    for (int x = 0; x < n; ++x) cells[static_cast<std::size_t>(partition[static_cast<std::size_t>(x)])].push_back(x);
    std::vector<double> cell_mass(static_cast<std::size_t>(n_cells), 0.0);
    for (int x = 0; x < n; ++x) cell_mass[static_cast<std::size_t>(partition[static_cast<std::size_t>(x)])] += mu0(x);

    // S^2: pairs whose one-step density with respect to mu0 exceeds 1/2.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> s2(n, n);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) s2(x, y) = p(x, y) / mu0(y) > 0.5;

    auto covered = [&](int a, int b) {
        double mass = 0.0;
        for (int x : cells[static_cast<std::size_t>(a)])
            for (int y : cells[static_cast<std::size_t>(b)])
                if (s2(x, y)) mass += mu0(x) * mu0(y);
        return mass >= 0.875 * cell_mass[static_cast<std::size_t>(a)] * cell_mass[static_cast<std::size_t>(b)];
    };
    std::vector<char> cover(static_cast<std::size_t>(n_cells * n_cells));
    for (int a = 0; a < n_cells; ++a)
        for (int b = 0; b < n_cells; ++b)
            cover[static_cast<std::size_t>(a * n_cells + b)] = n_cells > 0 && !cells[static_cast<std::size_t>(a)].empty() &&
                                                                !cells[static_cast<std::size_t>(b)].empty() && covered(a, b);

    const Eigen::MatrixXd p2 = p.power(2);
    std::optional<SmallSetConstruction> best;
    for (int cv = 0; cv < n_cells; ++cv) {
        const auto& vcell = cells[static_cast<std::size_t>(cv)];
        if (vcell.empty()) continue;
        const double v_mass = cell_mass[static_cast<std::size_t>(cv)];
        for (int cu = 0; cu < n_cells; ++cu) {
            if (!cover[static_cast<std::size_t>(cu * n_cells + cv)]) continue;
            StateSet D;
            for (int x : cells[static_cast<std::size_t>(cu)]) {
                double m = 0.0;
                for (int y : vcell)
                    if (s2(x, y)) m += mu0(y);
                if (m >= 0.75 * v_mass) D.push_back(x);
            }
            if (D.empty()) continue;
            for (int cw = 0; cw < n_cells; ++cw) {
                if (!cover[static_cast<std::size_t>(cv * n_cells + cw)]) continue;
                StateSet E;
                double e_mass = 0.0;
                for (int z : cells[static_cast<std::size_t>(cw)]) {
                    double m = 0.0;
                    for (int y : vcell)
                        if (s2(y, z)) m += mu0(y);
                    if (m >= 0.75 * v_mass) {
                        E.push_back(z);
                        e_mass += mu0(z);
                    }
                }
                if (E.empty()) continue;
                const double delta = v_mass * e_mass / 8.0;
                if (best && delta <= best->certificate.delta) continue;

                SmallSetConstruction c;
                c.certificate.K = D;
                c.certificate.m = 2;
                c.certificate.delta = delta;
                c.certificate.nu = Eigen::VectorXd::Zero(n);
                for (int z : E) c.certificate.nu(z) = mu0(z) / e_mass;
                c.u = cells[static_cast<std::size_t>(cu)].front();
                c.v = vcell.front();
                c.w = cells[static_cast<std::size_t>(cw)].front();
                c.E = E;
                c.v_cell_mass = v_mass;
                c.density_bound = std::numeric_limits<double>::infinity();
                for (int x : D)
                    for (int z : E) c.density_bound = std::min(c.density_bound, p2(x, z) / mu0(z));
                best = std::move(c);
            }
        }
    }
    if (best && !validate_certificate(p, best->certificate)) return std::nullopt;
    return best;
}

std::optional<SmallSetConstruction> small_set_search(const FiniteKernel& p, const Eigen::VectorXd& mu0,
                                                     const std::vector<Partition>& levels) {
    const std::vector<Partition> defaults{trivial_partition(p.n()), singleton_partition(p.n())};
    const auto& seq = levels.empty() ? defaults : levels;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (auto found = small_set_search_level(p, mu0, seq[i])) {
            found->level = i;
            return found;
        }
    }
    return std::nullopt;
}

std::optional<SmallSetCertificate> two_small_compose(const FiniteKernel& p, const SmallSetCertificate& cert_a,
                                                     const StateSet& C_in) {
    if (!validate_certificate(p, cert_a)) throw std::invalid_argument("certificate for A does not validate");
    const StateSet C = normalize_set(C_in, p.n());
    double reach = std::numeric_limits<double>::infinity();
    for (int x : C) {
        double mass = 0.0;
        for (int y : cert_a.K) mass += p(x, y);
        reach = std::min(reach, mass);
    }
    if (!(reach > 0.0)) return std::nullopt;
    SmallSetCertificate out;
    out.K = C;
    out.m = cert_a.m + 1;
    out.delta = cert_a.delta * std::min(reach, 1.0);
    out.nu = cert_a.nu;
    if (!validate_certificate(p, out)) return std::nullopt;
    return out;
}

DriftReport drift_condition_check(const FiniteKernel& p, const Eigen::VectorXd& V, const StateSet& K_in, double c,
                                  double lambda) {
    if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("drift constant c must lie in (0, 1)");
    if (!(lambda > 0.0)) throw std::invalid_argument("drift constant Lambda must be positive");
    if (V.size() != p.n()) throw std::invalid_argument("weight function has the wrong size");
    if ((V.array() < 1.0).any()) throw std::invalid_argument("weight function must satisfy V >= 1");
    const StateSet K = normalize_set(K_in, p.n());
    DriftReport rep;
    rep.pv = p.matrix() * V;
    std::vector<char> in_k(static_cast<std::size_t>(p.n()), 0);
    for (int x : K) in_k[static_cast<std::size_t>(x)] = 1;
    for (int x = 0; x < p.n(); ++x) {
        const double limit = in_k[static_cast<std::size_t>(x)] ? lambda : c * V(x);
        if (rep.pv(x) > limit) rep.violations.push_back(x);
    }
    rep.holds = rep.violations.empty();
    return rep;
}

}  // namespace sgl::doeblin
