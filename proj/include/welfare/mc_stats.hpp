#ifndef WELFARE_MC_STATS_HPP
#define WELFARE_MC_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/weighted_sample.hpp"

namespace welfare {

// Plain mean / sd helpers for draw vectors.
inline double draw_mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double draw_sd(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double m = draw_mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

inline double mean_standard_error(const std::vector<double>& x) {
    return draw_sd(x) / std::sqrt(static_cast<double>(x.size()));
}

// Standard error of the plug-in lower superquantile of a pooled Monte Carlo
// sample, via the influence function phi(z) = lambda + min(z - lambda, 0)/beta.
// Draws are grouped; group g has probability weight probs[g] split evenly
// over its draws, and the influence values are centered within each group.
inline double grouped_lower_sq_se(const std::vector<std::vector<double>>& group_draws,
                                  const std::vector<double>& probs, double lambda_star,
                                  double beta) {
    double var = 0.0;
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (std::size_t g = 0; g < group_draws.size(); ++g) {
        const auto& d = group_draws[g];
        if (d.size() < 2) continue;
        double n = static_cast<double>(d.size());
        double m = 0.0;
        for (double z : d) m += std::min(z - lambda_star, 0.0) / beta;
        m /= n;
        double s2 = 0.0;
        for (double z : d) {
            double phi = std::min(z - lambda_star, 0.0) / beta - m;
            s2 += phi * phi;
        }
        s2 /= (n - 1.0);
        double w = probs[g] / total;
        var += w * w * s2 / n;
    }
    return std::sqrt(var);
}

// Upper-tail mirror with phi(z) = lambda + max(z - lambda, 0)/(1 - alpha).
inline double grouped_upper_sq_se(const std::vector<std::vector<double>>& group_draws,
                                  const std::vector<double>& probs, double lambda_star,
                                  double alpha) {
    double var = 0.0;
    double tail = 1.0 - alpha;
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (std::size_t g = 0; g < group_draws.size(); ++g) {
        const auto& d = group_draws[g];
        if (d.size() < 2) continue;
        double n = static_cast<double>(d.size());
        double m = 0.0;
        for (double z : d) m += std::max(z - lambda_star, 0.0) / tail;
        m /= n;
        double s2 = 0.0;
        for (double z : d) {
            double phi = std::max(z - lambda_star, 0.0) / tail - m;
            s2 += phi * phi;
        }
        s2 /= (n - 1.0);
        double w = probs[g] / total;
        var += w * w * s2 / n;
    }
    return std::sqrt(var);
}

// Standard error of the closed-form lower superquantile of an aggregate
// sample whose point values carry their own standard errors.  The closed
// form is linear in the values with tail coefficients
//   (min(C_i, beta) - min(C_{i-1}, beta)) / beta,
// so the errors propagate through those coefficients.
inline double aggregate_lower_sq_se(const std::vector<double>& values,
                                    const std::vector<double>& probs,
                                    const std::vector<double>& value_se, double beta) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    double var = 0.0;
    double cum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double prev = std::min(cum, beta);
        cum += probs[order[r]] / total;
        double coeff = (std::min(cum, beta) - prev) / beta;
        double contrib = coeff * value_se[order[r]];
        var += contrib * contrib;
    }
    return std::sqrt(var);
}

// Upper-tail mirror: coefficients over the highest (1 - alpha) mass.
inline double aggregate_upper_sq_se(const std::vector<double>& values,
                                    const std::vector<double>& probs,
                                    const std::vector<double>& value_se, double alpha) {
    std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    double tail = 1.0 - alpha;
    double var = 0.0;
    double cum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double prev = std::min(cum, tail);
        cum += probs[order[r]] / total;
        double coeff = (std::min(cum, tail) - prev) / tail;
        double contrib = coeff * value_se[order[r]];
        var += contrib * contrib;
    }
    return std::sqrt(var);
}

inline double combine_se(double a, double b) { return std::sqrt(a * a + b * b); }

// Pooled weighted sample from per-group draw vectors: group g's probability
// is split evenly across its draws.
inline WeightedSample pooled_sample(const std::vector<std::vector<double>>& group_draws,
                                    const std::vector<double>& probs) {
    std::vector<double> v;
    std::vector<double> w;
    std::size_t total_n = 0;
    for (const auto& d : group_draws) total_n += d.size();
    v.reserve(total_n);
    w.reserve(total_n);
    for (std::size_t g = 0; g < group_draws.size(); ++g) {
        double per = probs[g] / static_cast<double>(group_draws[g].size());
        for (double z : group_draws[g]) {
            v.push_back(z);
            w.push_back(per);
        }
    }
    return WeightedSample::from_weighted(std::move(v), std::move(w));
}

} // namespace welfare

#endif
