#ifndef WELFARE_VARIATIONAL_LP_HPP
#define WELFARE_VARIATIONAL_LP_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/simplex.hpp"

namespace welfare {

/*!
 * Plug-in tail-mean program over estimated group effects tau_hat:
 *
 *   max over lambda of  lambda + (1/beta) sum_k w_k min(tau_hat_k - lambda, 0)
 *
 * with uniform w_k = 1/K unless explicit weights are supplied (weights are
 * normalized to total one).  The objective is concave piecewise-linear, so
 * an optimum is attained at one of the tau_hat breakpoints.
 */
struct PluginProgram {
    std::vector<double> tau_hat;
    double beta = 0.5;
    std::vector<double> weights; // empty means uniform

    void validate() const {
        if (tau_hat.empty()) throw EmptySample("plug-in program needs at least one effect");
        if (!(beta > 0.0 && beta <= 1.0)) {
            throw InvalidLevel("beta must lie in (0, 1], got " + std::to_string(beta));
        }
        for (std::size_t k = 0; k < tau_hat.size(); ++k) {
            if (!std::isfinite(tau_hat[k])) {
                throw NonFiniteValue("tau_hat at index " + std::to_string(k) + " is not finite");
            }
        }
        if (!weights.empty()) {
            if (weights.size() != tau_hat.size()) {
                throw LengthMismatch("weights and tau_hat differ in length");
            }
            for (std::size_t k = 0; k < weights.size(); ++k) {
                if (!std::isfinite(weights[k]) || !(weights[k] > 0.0)) {
                    throw NonPositiveWeight("weight at index " + std::to_string(k) +
                                            " must be finite and positive");
                }
            }
        }
    }

    std::vector<double> normalized_weights() const {
        std::vector<double> w;
        if (weights.empty()) {
            w.assign(tau_hat.size(), 1.0 / static_cast<double>(tau_hat.size()));
        } else {
            double total = std::accumulate(weights.begin(), weights.end(), 0.0);
            w.reserve(weights.size());
            for (double x : weights) w.push_back(x / total);
        }
        return w;
    }
};

struct LpSolution {
    double lambda_hat = 0.0;
    std::vector<double> z; // z_k = min(tau_hat_k - lambda_hat, 0)
    double objective = 0.0;
};

struct InterpretedSolution {
    double beta_quantile_estimate = 0.0;
    double superquantile_estimate = 0.0;
    std::size_t n_binding = 0; // constraints with tau_hat_k strictly below lambda_hat
};

namespace detail {

inline std::vector<double> fill_z(const std::vector<double>& tau, double lambda) {
    std::vector<double> z(tau.size());
    for (std::size_t k = 0; k < tau.size(); ++k) z[k] = std::min(tau[k] - lambda, 0.0);
    return z;
}

} // namespace detail

// Enumerates the distinct breakpoints in ascending order, evaluates the
// objective at each, and returns the smallest maximizer (the generalized
// beta-quantile convention).  Near-ties within a small relative tolerance
// resolve to the smaller breakpoint.
inline LpSolution solve_breakpoints(const PluginProgram& prog) {
    prog.validate();
    const std::vector<double> w = prog.normalized_weights();
    const std::size_t k_n = prog.tau_hat.size();
    std::vector<std::size_t> order(k_n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return prog.tau_hat[a] < prog.tau_hat[b]; });

    // Prefix sums over the sorted effects make each evaluation O(1):
    // objective(v) = v + (sum_{tau<v} w tau - v sum_{tau<v} w) / beta.
    std::vector<double> cand;
    std::vector<double> objs;
    cand.reserve(k_n);
    objs.reserve(k_n);
    double run_w = 0.0;  // weight at or below the current breakpoint
    double run_wv = 0.0; // weighted value sum at or below
    for (std::size_t r = 0; r < k_n; ++r) {
        double v = prog.tau_hat[order[r]];
        if (!cand.empty() && v == cand.back()) {
            run_w += w[order[r]];
            run_wv += w[order[r]] * v;
            continue; // duplicate breakpoint, already evaluated
        }
        double obj = v + (run_wv - v * run_w) / prog.beta;
        run_w += w[order[r]];
        run_wv += w[order[r]] * v;
        cand.push_back(v);
        objs.push_back(obj);
    }
    double best = *std::max_element(objs.begin(), objs.end());
    // An exact plateau of maximizers resolves to its smallest breakpoint;
    // the tolerance only absorbs roundoff between mathematically equal
    // evaluations.
    double tie_tol = 1e-12 * (1.0 + std::abs(best));
    std::size_t pick = 0;
    while (objs[pick] < best - tie_tol) ++pick;
    LpSolution sol;
    sol.lambda_hat = cand[pick];
    sol.z = detail::fill_z(prog.tau_hat, sol.lambda_hat);
    sol.objective = best;
    return sol;
}

// Same program as an explicit linear program,
//
//   max  lambda + (1/beta) sum_k w_k z_k
//   s.t. tau_hat_k - lambda >= z_k  and  z_k <= 0,
//
// solved by the dense simplex after the standard substitutions
// lambda = lp - lm (lp, lm >= 0) and z_k = -s_k (s_k >= 0).  Rows with a
// negative right-hand side are negated, which leaves s_k as the initial
// basic variable there, so no artificial variables are needed.
inline LpSolution solve_simplex_lp(const PluginProgram& prog) {
    prog.validate();
    const std::vector<double> w = prog.normalized_weights();
    const std::size_t k_n = prog.tau_hat.size();
    const std::size_t n = 2 + 2 * k_n; // lp, lm, s_0..s_{K-1}, slack_0..slack_{K-1}

    SimplexProblem sp;
    sp.a.assign(k_n, std::vector<double>(n, 0.0));
    sp.b.assign(k_n, 0.0);
    sp.c.assign(n, 0.0);
    sp.basis.assign(k_n, 0);
    sp.c[0] = 1.0;
    sp.c[1] = -1.0;
    for (std::size_t k = 0; k < k_n; ++k) {
        // lp - lm - s_k + slack_k = tau_hat_k
        double sign = prog.tau_hat[k] >= 0.0 ? 1.0 : -1.0;
        sp.a[k][0] = sign;
        sp.a[k][1] = -sign;
        sp.a[k][2 + k] = -sign;
        sp.a[k][2 + k_n + k] = sign;
        sp.b[k] = sign * prog.tau_hat[k];
        sp.basis[k] = sign > 0.0 ? 2 + k_n + k : 2 + k;
        sp.c[2 + k] = -w[k] / prog.beta;
    }

    SimplexResult res = solve_simplex(sp);
    LpSolution sol;
    sol.lambda_hat = res.x[0] - res.x[1];
    sol.z.resize(k_n);
    for (std::size_t k = 0; k < k_n; ++k) sol.z[k] = -res.x[2 + k];
    sol.objective = res.objective;

    double check = solve_breakpoints(prog).objective;
    if (std::abs(check - sol.objective) > 1e-6 * (1.0 + std::abs(check))) {
        throw LpNumericalFailure("simplex objective " + std::to_string(sol.objective) +
                                 " disagrees with breakpoint objective " + std::to_string(check));
    }
    return sol;
}

// Reads the estimates off a solution: the attaining lambda estimates the
// beta-quantile of the effect distribution, the objective estimates the
// tail mean, and n_binding counts effects strictly inside the tail.
inline InterpretedSolution interpret_solution(const LpSolution& sol, const PluginProgram& prog) {
    InterpretedSolution out;
    out.beta_quantile_estimate = sol.lambda_hat;
    out.superquantile_estimate = sol.objective;
    out.n_binding = 0;
    for (double t : prog.tau_hat) {
        if (t < sol.lambda_hat) ++out.n_binding;
    }
    return out;
}

} // namespace welfare

#endif
