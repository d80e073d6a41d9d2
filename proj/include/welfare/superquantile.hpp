#ifndef WELFARE_SUPERQUANTILE_HPP
#define WELFARE_SUPERQUANTILE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/weighted_sample.hpp"

namespace welfare {

enum class Tail { Lower, Upper };
enum class Method { SortedClosedForm, VariationalLP };

struct SuperquantileResult {
    double value = 0.0;
    double lambda_star = 0.0; // attaining threshold, a generalized quantile
    double level = 0.0;       // beta for Tail::Lower, alpha for Tail::Upper
    Method method = Method::SortedClosedForm;
    Tail tail = Tail::Lower;
};

/*!
 * Lower-tail superquantile: the mean of the lowest beta mass,
 *
 *   (1/beta) * [ sum_{i<m} w_i v_(i) + (beta - C_{m-1}) v_(m) ],
 *
 * where m is the first sorted index whose cumulative weight reaches beta.
 * Equals the mean at beta = 1 and the minimum once beta is at or below the
 * first weight.  The attaining threshold is the beta-quantile.
 */
inline SuperquantileResult lower_superquantile(const WeightedSample& s, BetaLevel beta) {
    const auto& v = s.values();
    const auto& w = s.weights();
    const auto& c = s.cumulative_weights();
    const double b = beta.value();
    double acc = 0.0;
    double below = 0.0;
    std::size_t m = 0;
    while (m + 1 < v.size() && c[m] < b) {
        acc += w[m] * v[m];
        below = c[m];
        ++m;
    }
    double value = (acc + (b - below) * v[m]) / b;
    return {value, v[m], b, Method::SortedClosedForm, Tail::Lower};
}

// Upper-tail superquantile: the mean of the highest (1 - alpha) mass,
// computed by the mirrored closed form over the sorted suffix.  Satisfies
// the reflection identity  upper(s, alpha) = -lower(negated s, 1 - alpha).
inline SuperquantileResult upper_superquantile(const WeightedSample& s, AlphaLevel alpha) {
    const auto& v = s.values();
    const auto& w = s.weights();
    const auto& c = s.cumulative_weights();
    const double a = alpha.value();
    const double tail_mass = 1.0 - a;
    double acc = 0.0;
    double above = 0.0; // suffix mass strictly after index m
    std::size_t m = v.size() - 1;
    while (m > 0 && 1.0 - c[m - 1] < tail_mass) {
        acc += w[m] * v[m];
        above = 1.0 - c[m - 1];
        --m;
    }
    double value = (acc + (tail_mass - above) * v[m]) / tail_mass;
    return {value, v[m], a, Method::SortedClosedForm, Tail::Upper};
}

// Lower superquantile through the quantile-function representation
// (1/beta) * integral of the quantile over (0, beta].  The quantile is a
// step function, so the integral is a finite sum and the result agrees
// with the closed form up to roundoff.
inline double superquantile_via_quantile_integral(const WeightedSample& s, BetaLevel beta) {
    const auto& v = s.values();
    const auto& c = s.cumulative_weights();
    const double b = beta.value();
    double integral = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < v.size() && prev < b; ++i) {
        double hi = c[i] < b ? c[i] : b;
        integral += v[i] * (hi - prev);
        prev = c[i];
    }
    return integral / b;
}

// Lower superquantiles at several levels in one sorted pass.
// Levels must be strictly ascending; each must be a valid beta.
inline std::vector<SuperquantileResult> superquantile_curve(const WeightedSample& s,
                                                            const std::vector<double>& betas) {
    for (std::size_t i = 1; i < betas.size(); ++i) {
        if (!(betas[i - 1] < betas[i])) {
            throw UnsortedLevels("beta levels must be strictly ascending at position " +
                                 std::to_string(i));
        }
    }
    for (double b : betas) BetaLevel{b};
    const auto& v = s.values();
    const auto& w = s.weights();
    const auto& c = s.cumulative_weights();
    std::vector<SuperquantileResult> out;
    out.reserve(betas.size());
    double acc = 0.0;
    double below = 0.0;
    std::size_t m = 0;
    for (double b : betas) {
        while (m + 1 < v.size() && c[m] < b) {
            acc += w[m] * v[m];
            below = c[m];
            ++m;
        }
        double value = (acc + (b - below) * v[m]) / b;
        out.push_back({value, v[m], b, Method::SortedClosedForm, Tail::Lower});
    }
    return out;
}

} // namespace welfare

#endif
