#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <iosfwd>
#include <string>
#include <vector>

namespace sgl::doeblin::exact {

/// Rational arithmetic for kernels given as finite decimals.
using Rational = boost::multiprecision::cpp_rational;
using RationalMatrix = std::vector<std::vector<Rational>>;

/// "0.25", "-3", "1e-2", "7/8" -> exact rational. Throws std::invalid_argument.
Rational parse_rational(const std::string& token);

/// Same text format as FiniteKernel, rows must sum to exactly 1.
RationalMatrix parse_kernel(std::istream& in);
RationalMatrix parse_kernel_text(const std::string& text);

RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b);

/// Unique stationary distribution by exact Gaussian elimination; throws
/// std::domain_error if it is not unique.
std::vector<Rational> invariant_measure(const RationalMatrix& p);

/// delta = sum_y min_{x in K} P^m(x, y).
Rational minorization_delta(const RationalMatrix& p, const std::vector<int>& K, int m);
Rational condition_b(const RationalMatrix& p, const std::vector<int>& K);

struct GeometricReport {
    std::vector<Rational> distances;  // max_x ||P^n delta_x - mu_*||, n = 0..horizon
    std::vector<Rational> bounds;     // 2 (1 - eps)^{floor(n/2)}
    bool holds = false;
};

GeometricReport geometric_bound_check(const RationalMatrix& p, const Rational& epsilon, int horizon);

}  // namespace sgl::doeblin::exact
