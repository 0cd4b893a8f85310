#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgl::doeblin {

/// Sorted list of distinct state indices.
using StateSet = std::vector<int>;

/// Row-stochastic matrix on n states.
class FiniteKernel {
public:
    /// Throws std::invalid_argument unless every entry is finite and >= 0 and
    /// every row sums to 1 within 1e-12.
    explicit FiniteKernel(Eigen::MatrixXd rows);

    int n() const noexcept { return static_cast<int>(rows_.rows()); }
    const Eigen::MatrixXd& matrix() const noexcept { return rows_; }
    double operator()(int x, int y) const noexcept { return rows_(x, y); }

    /// m-step transition matrix P^m (m >= 0).
    Eigen::MatrixXd power(int m) const;

    /// Plain-text kernel: first line n, then n rows of n decimals.
    static FiniteKernel parse(std::istream& in);
    static FiniteKernel parse_text(const std::string& text);
    std::string to_text() const;

private:
    Eigen::MatrixXd rows_;
};

/// Minorization witness P^m(x, .) >= delta nu(.) for x in K, optionally with
/// the accessibility constant delta' = min_x P(x, K).
struct SmallSetCertificate {
    StateSet K;
    int m = 1;
    double delta = 0.0;
    Eigen::VectorXd nu;
    std::optional<double> delta_prime;

    /// key = value block (K, m, delta, nu, delta_prime when present).
    std::string to_text() const;
};

/// Tolerance for elementwise certificate checks in floating point.
inline constexpr double kCertificateTolerance = 1e-12;

/// Normalizes and checks a state subset against n; throws std::invalid_argument
/// if it is empty or out of range.
StateSet normalize_set(StateSet s, int n);

/// Exact elementwise check of the certificate (within kCertificateTolerance),
/// including the delta' bound when present.
bool validate_certificate(const FiniteKernel& p, const SmallSetCertificate& cert,
                          double tolerance = kCertificateTolerance);

/// Maximal (delta, nu) for (K, m) from the column minima of P^m over K.
/// Returns nullopt when the rows share no common component.
std::optional<SmallSetCertificate> minorization(const FiniteKernel& p, const StateSet& K, int m);

/// delta' = min over all x of P(x, K); 0 is a valid (failing) answer.
double condition_b(const FiniteKernel& p, const StateSet& K);

struct ContractionReport {
    double factor_bound = 1.0;       // 1 - delta delta'
    double worst_dirac_ratio = 0.0;  // contraction coefficient of P^2 over Dirac pairs
    double worst_random_ratio = 0.0;
    /// min over x, y of P^2(x, y) - delta delta' nu(y); >= 0 means the two-step
    /// lower bound holds on every singleton.
    double lower_bound_slack = 0.0;
    bool contraction_holds = false;
    bool lower_bound_holds = false;

    bool holds() const noexcept { return contraction_holds && lower_bound_holds; }
};

/// Checks ||P^2 mu - P^2 nu|| <= (1 - delta delta') ||mu - nu|| on all Dirac pairs
/// and `n_random_pairs` random measure pairs, plus (P^2 mu)(A) >= delta delta' nu(A).
/// Throws std::invalid_argument if the certificate is invalid, has m != 1, or
/// lacks delta'.
ContractionReport contraction_check(const FiniteKernel& p, const SmallSetCertificate& cert,
                                    int n_random_pairs = 64, std::uint64_t seed = 0);

/// Unique stationary distribution; throws NonUniqueStationary otherwise.
class NonUniqueStationary : public std::domain_error {
public:
    using std::domain_error::domain_error;
};
Eigen::VectorXd invariant_measure(const FiniteKernel& p);

struct GeometricReport {
    int horizon = 0;
    double epsilon = 0.0;  // delta delta'
    /// max over n of (max_x ||P^n delta_x - mu_*||) - 2 (1 - eps)^{floor(n/2)}; <= 0 passes.
    double worst_excess = 0.0;
    std::vector<double> distances;  // max over x, per n
    std::vector<double> bounds;     // 2 (1 - eps)^{floor(n/2)}, per n
    bool holds = false;
};

/// ||P^n delta_x - mu_*|| <= 2 (1 - delta delta')^{floor(n/2)} for n = 0..horizon.
GeometricReport geometric_bound_check(const FiniteKernel& p, const SmallSetCertificate& cert, int horizon);
GeometricReport geometric_bound_check(const FiniteKernel& p, double epsilon, int horizon);

/// Partition of the state space as a label per state.
using Partition = std::vector<int>;

Partition trivial_partition(int n);
Partition singleton_partition(int n);

/// Increasing partitions generated by balls B(x_i, eps_j): level L refines by
/// every ball with i, j <= L (one level per entry of `radii`), and a final
/// singleton level is appended if the balls do not already separate points.
std::vector<Partition> ball_partitions(const Eigen::MatrixXd& distances, const std::vector<int>& centers,
                                       const std::vector<double>& radii);

/// Outcome of the accessible-small-set construction on one partition level.
struct SmallSetConstruction {
    SmallSetCertificate certificate;  // K = D, m = 2, nu = mu0(. & E) / mu0(E)
    std::size_t level = 0;
    int u = 0, v = 0, w = 0;          // representative states of the chosen cells
    StateSet E;
    double v_cell_mass = 0.0;         // mu0(P_n(v))
    /// min over x in D, z in E of the two-step density p^2(x, z) = P^2(x, z) / mu0(z).
    double density_bound = 0.0;
};

/// Runs the construction with the 1/2 density threshold and 7/8 cover rule on
/// each partition level in order (coarse to fine) and returns the first level
/// that produces a certificate, validated elementwise. Default levels are the
/// trivial partition followed by singletons.
std::optional<SmallSetConstruction> small_set_search(const FiniteKernel& p, const Eigen::VectorXd& mu0,
                                                     const std::vector<Partition>& levels = {});

/// The construction on a single partition level.
std::optional<SmallSetConstruction> small_set_search_level(const FiniteKernel& p, const Eigen::VectorXd& mu0,
                                                           const Partition& partition);

/// Turns a certificate for an accessible set A into one for C with m + 1 steps
/// and delta * min_{x in C} P(x, A). Returns nullopt if A is not reached from
/// some state of C.
std::optional<SmallSetCertificate> two_small_compose(const FiniteKernel& p, const SmallSetCertificate& cert_a,
                                                     const StateSet& C);

struct DriftReport {
    bool holds = false;
    std::vector<int> violations;
    Eigen::VectorXd pv;
};

/// (PV)(x) <= c V(x) off K and (PV)(x) <= Lambda on K. Throws for c outside
/// (0, 1), Lambda <= 0, or V < 1 anywhere.
DriftReport drift_condition_check(const FiniteKernel& p, const Eigen::VectorXd& V, const StateSet& K, double c,
                                  double lambda);

/// Total variation mass ||mu|| = sum |mu(x)|.
double variation_norm(const Eigen::VectorXd& signed_measure);
/// Weighted version sum V(x) |mu(x)|.
double weighted_variation_norm(const Eigen::VectorXd& signed_measure, const Eigen::VectorXd& V);

}  // namespace sgl::doeblin
