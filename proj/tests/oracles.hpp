#ifndef TESTS_ORACLES_HPP
#define TESTS_ORACLES_HPP

// Independent reference implementations used to pin expected values.  Each
// oracle recomputes a quantity from its definition with a different
// algorithm than the library (direct maximization, direct integration,
// closed forms), so agreement is evidence rather than tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "welfare/math.hpp"

namespace oracles {

// Evaluates the variational objective g(lambda) directly.
inline double variational_objective(const std::vector<double>& v, const std::vector<double>& w,
                                    double beta, double lambda) {
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        acc += (w[i] / total) * std::min(v[i] - lambda, 0.0);
    }
    return lambda + acc / beta;
}

// Lower superquantile as the maximum of the variational objective.  The
// objective is concave piecewise linear with kinks only at sample points,
// so scanning the sample points plus surrounding candidates is exact.
inline double superquantile_grid_search(const std::vector<double>& v,
                                        const std::vector<double>& w, double beta) {
    double best = -1e300;
    std::vector<double> candidates = v;
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    candidates.push_back(lo - 1.0);
    candidates.push_back(hi + 1.0);
    for (double c : candidates) {
        best = std::max(best, variational_objective(v, w, beta, c));
    }
    return best;
}

// Lower superquantile as the average of the quantile function over (0, beta],
// via direct Riemann summation on a fine rank grid of the sorted sample.
inline double superquantile_rank_average(std::vector<double> v, std::vector<double> w,
                                         double beta, std::size_t steps = 400000) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return v[a] < v[b];
    });
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> cum;
    double acc = 0.0;
    std::vector<double> sorted;
    for (std::size_t idx : order) {
        acc += w[idx] / total;
        cum.push_back(acc);
        sorted.push_back(v[idx]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        double theta = beta * (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
        auto it = std::lower_bound(cum.begin(), cum.end(), theta);
        std::size_t j = it == cum.end() ? cum.size() - 1
                                        : static_cast<std::size_t>(it - cum.begin());
        sum += sorted[j];
    }
    return sum / static_cast<double>(steps);
}

// Standard normal lower superquantile, closed form.
inline double normal_lower_superquantile(double beta) {
    double z = welfare::normal_quantile(beta);
    return -welfare::normal_pdf(z) / beta;
}

// Mean of the maximum of independent Gumbel(u_j, 1) utilities.
inline double gumbel_max_mean(const std::vector<double>& u) {
    double m = *std::max_element(u.begin(), u.end());
    double acc = 0.0;
    for (double x : u) acc += std::exp(x - m);
    return m + std::log(acc) + welfare::euler_gamma;
}

// Mean of a normal truncated to its upper tail [cutoff, inf).
inline double normal_upper_tail_mean(double mu, double sigma, double cutoff) {
    double d = (cutoff - mu) / sigma;
    double tail = 1.0 - welfare::normal_cdf(d);
    return mu + sigma * welfare::normal_pdf(d) / tail;
}

} // namespace oracles

#endif
