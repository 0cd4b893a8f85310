#include "sgl/doeblin_exact.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace sgl::doeblin::exact {

namespace {

Rational abs_value(const Rational& r) { return r < 0 ? Rational(-r) : r; }

Rational pow10(long e) {
    Rational out = 1;
    const Rational ten = 10;
    for (long i = 0; i < (e < 0 ? -e : e); ++i) out *= ten;
    return e < 0 ? Rational(1 / out) : out;
}

}  // namespace

Rational parse_rational(const std::string& token) {
    auto bad = [&] { return std::invalid_argument("not an exact decimal: '" + token + "'"); };
    if (token.empty()) throw bad();
    if (const auto slash = token.find('/'); slash != std::string::npos) {
        const Rational num = parse_rational(token.substr(0, slash));
        const Rational den = parse_rational(token.substr(slash + 1));
        if (den == 0) throw bad();
        return num / den;
    }
    std::size_t i = 0;
    bool negative = false;
    if (token[i] == '+' || token[i] == '-') negative = token[i++] == '-';
    boost::multiprecision::cpp_int digits = 0;
    long scale = 0;
    bool seen_digit = false;
    bool seen_point = false;
    for (; i < token.size(); ++i) {
        const char ch = token[i];
        if (ch >= '0' && ch <= '9') {
            digits = digits * 10 + (ch - '0');
            seen_digit = true;
            if (seen_point) --scale;
        } else if (ch == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!seen_digit) throw bad();
    if (i < token.size()) {
        if (token[i] != 'e' && token[i] != 'E') throw bad();
        std::size_t used = 0;
        long exponent = 0;
        try {
            exponent = std::stol(token.substr(i + 1), &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (used != token.size() - i - 1) throw bad();
        scale += exponent;
    }
    Rational out = Rational(digits) * pow10(scale);
    return negative ? Rational(-out) : out;
}

RationalMatrix parse_kernel(std::istream& in) {
    int n = 0;
    if (!(in >> n) || n <= 0) throw std::invalid_argument("kernel file: first token must be a positive state count");
    RationalMatrix p(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
    for (auto& row : p) {
        Rational sum = 0;
        for (auto& entry : row) {
            std::string tok;
            if (!(in >> tok)) throw std::invalid_argument("kernel file: too few entries");
            entry = parse_rational(tok);
            if (entry < 0) throw std::invalid_argument("kernel file: negative entry");
            sum += entry;
        }
        if (sum != 1) throw std::invalid_argument("kernel file: a row does not sum to exactly 1");
    }
    return p;
}

RationalMatrix parse_kernel_text(const std::string& text) {
    std::istringstream in(text);
    return parse_kernel(in);
}

RationalMatrix multiply(const RationalMatrix& a, const RationalMatrix& b) {
    const std::size_t n = a.size();
    RationalMatrix out(n, std::vector<Rational>(b.front().size()));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (a[i][k] == 0) continue;
            for (std::size_t j = 0; j < b[k].size(); ++j) out[i][j] += a[i][k] * b[k][j];
        }
    return out;
}

std::vector<Rational> invariant_measure(const RationalMatrix& p) {
    const std::size_t n = p.size();
    // Rows 0..n-1: (P^T - I) mu = 0; row n: sum mu = 1. Augmented with the rhs.
    RationalMatrix a(n + 1, std::vector<Rational>(n + 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = p[j][i] - (i == j ? 1 : 0);
    for (std::size_t j = 0; j < n; ++j) a[n][j] = 1;
    a[n][n] = 1;

    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < n + 1; ++col) {
        std::size_t pivot = rank;
        while (pivot <= n && a[pivot][col] == 0) ++pivot;
        if (pivot > n) continue;
        std::swap(a[pivot], a[rank]);
        const Rational inv = 1 / a[rank][col];
        for (auto& v : a[rank]) v *= inv;
        for (std::size_t r = 0; r <= n; ++r) {
            if (r == rank || a[r][col] == 0) continue;
            const Rational f = a[r][col];
            for (std::size_t c = 0; c <= n; ++c) a[r][c] -= f * a[rank][c];
        }
        ++rank;
    }
    if (rank != n) throw std::domain_error("stationary distribution is not unique");
    for (std::size_t r = rank; r <= n; ++r)
        if (a[r][n] != 0) throw std::domain_error("stationary system is inconsistent");
    std::vector<Rational> mu(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto lead = std::find_if(a[r].begin(), a[r].begin() + static_cast<std::ptrdiff_t>(n),
                                       [](const Rational& v) { return v != 0; });
        mu[static_cast<std::size_t>(lead - a[r].begin())] = a[r][n];
    }
    return mu;
}

namespace {

RationalMatrix matrix_power(const RationalMatrix& p, int m) {
    RationalMatrix out(p.size(), std::vector<Rational>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) out[i][i] = 1;
    for (int i = 0; i < m; ++i) out = multiply(out, p);
    return out;
}

}  // namespace

Rational minorization_delta(const RationalMatrix& p, const std::vector<int>& K, int m) {
    if (K.empty()) throw std::invalid_argument("K must be nonempty");
    const RationalMatrix pm = matrix_power(p, m);
    Rational delta = 0;
    for (std::size_t y = 0; y < p.size(); ++y) {
        Rational lo = pm[static_cast<std::size_t>(K.front())][y];
        for (int x : K) lo = std::min(lo, pm[static_cast<std::size_t>(x)][y]);
        delta += lo;
    }
    return delta;
}

Rational condition_b(const RationalMatrix& p, const std::vector<int>& K) {
    Rational best = 1;
    for (const auto& row : p) {
        Rational mass = 0;
        for (int y : K) mass += row[static_cast<std::size_t>(y)];
        best = std::min(best, mass);
    }
    return best;
}

GeometricReport geometric_bound_check(const RationalMatrix& p, const Rational& epsilon, int horizon) {
    if (!(epsilon > 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    const auto mu_star = invariant_measure(p);
    GeometricReport rep;
    rep.holds = true;
    RationalMatrix pn = matrix_power(p, 0);
    Rational factor = 1;
    for (int n = 0; n <= horizon; ++n) {
        if (n > 0 && n % 2 == 0) factor *= (1 - epsilon);
        Rational worst = 0;
        for (const auto& row : pn) {
            Rational d = 0;
            for (std::size_t y = 0; y < row.size(); ++y) d += abs_value(row[y] - mu_star[y]);
            worst = std::max(worst, d);
        }
        const Rational bound = 2 * factor;
        rep.distances.push_back(worst);
        rep.bounds.push_back(bound);
        if (worst > bound) rep.holds = false;
        pn = multiply(pn, p);
    }
    return rep;
}

}  // namespace sgl::doeblin::exact
