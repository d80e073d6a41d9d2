#ifndef WELFARE_SIMPLEX_HPP
#define WELFARE_SIMPLEX_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "welfare/errors.hpp"

namespace welfare {

// Equality-form linear program  max c'x  s.t.  Ax = b, x >= 0,  b >= 0,
// whose initial basis columns already form an identity submatrix.
struct SimplexProblem {
    std::vector<std::vector<double>> a; // m rows of length n
    std::vector<double> b;              // length m, nonnegative
    std::vector<double> c;              // length n
    std::vector<std::size_t> basis;     // length m, initial basic variable per row
};

struct SimplexResult {
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

// Dense tableau simplex with Bland's smallest-index rule, which cannot
// cycle, so the iteration cap is only a guard against numerical breakdown.
inline SimplexResult solve_simplex(const SimplexProblem& p) {
    const std::size_t m = p.a.size();
    const std::size_t n = p.c.size();
    const double eps = 1e-9;

    std::vector<std::vector<double>> t(m, std::vector<double>(n + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        if (p.a[i].size() != n) throw LpNumericalFailure("simplex: ragged constraint matrix");
        if (p.b[i] < 0.0) throw LpNumericalFailure("simplex: negative right-hand side");
        for (std::size_t j = 0; j < n; ++j) t[i][j] = p.a[i][j];
        t[i][n] = p.b[i];
    }
    std::vector<std::size_t> basis = p.basis;

    // Price out the starting basis: r_j = c_j - c_B' B^{-1} A_j.  The basis
    // columns are the identity, so B^{-1} A = A here.
    std::vector<double> r(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = p.c[j];
        for (std::size_t i = 0; i < m; ++i) acc -= p.c[basis[i]] * t[i][j];
        r[j] = acc;
    }

    const std::size_t max_iter = 4000 + 400 * m;
    std::size_t iter = 0;
    while (true) {
        std::size_t q = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (r[j] > eps) {
                q = j;
                break;
            }
        }
        if (q == n) break;

        std::size_t pivot_row = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][q] > eps) {
                double ratio = t[i][n] / t[i][q];
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (pivot_row == m || basis[i] < basis[pivot_row]))) {
                    best_ratio = ratio;
                    pivot_row = i;
                }
            }
        }
        if (pivot_row == m) throw LpNumericalFailure("simplex: unbounded direction");

        double piv = t[pivot_row][q];
        for (std::size_t j = 0; j <= n; ++j) t[pivot_row][j] /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == pivot_row) continue;
            double f = t[i][q];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n; ++j) t[i][j] -= f * t[pivot_row][j];
        }
        double f = r[q];
        for (std::size_t j = 0; j < n; ++j) r[j] -= f * t[pivot_row][j];
        basis[pivot_row] = q;

        if (++iter > max_iter) {
            throw LpNumericalFailure("simplex: iteration cap exceeded after " +
                                     std::to_string(iter) + " pivots");
        }
    }

    SimplexResult out;
    out.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) out.x[basis[i]] = t[i][n];
    double obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj += p.c[j] * out.x[j];
    if (!std::isfinite(obj)) throw LpNumericalFailure("simplex: non-finite objective");
    out.objective = obj;
    out.iterations = iter;
    return out;
}

} // namespace welfare

#endif
