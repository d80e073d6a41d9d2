#ifndef WELFARE_CV_HPP
#define WELFARE_CV_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/pum.hpp"

namespace welfare {

struct PriceGroup {
    double prob = 0.0;
    std::vector<double> h; // non-price utility component per alternative
};

/*!
 * Price-change scenario under quasi-linear utility
 *
 *   u_j(x, p) = h_j(x) + marginal_utility_income * (income - p_j),
 *
 * so the money-metric welfare effect of moving prices from price_before to
 * price_after is the utility effect divided by marginal_utility_income.
 * cv_slack_mu, when finite, asserts a per-draw bound on
 * group mean CV - individual CV, enabling the lower sandwich.
 */
struct PriceScenario {
    double marginal_utility_income = 1.0;
    double income = 0.0;
    std::vector<double> price_before;
    std::vector<double> price_after;
    std::vector<PriceGroup> groups;
    std::vector<NoiseSpec> noise;
    double cv_slack_mu = std::numeric_limits<double>::quiet_NaN();

    bool has_slack_mu() const { return std::isfinite(cv_slack_mu); }
};

// Utility evaluated at a full price vector; alternatives must not react to
// other alternatives' prices under the quasi-linear form.
using PriceUtilityFn =
    std::function<double(std::size_t group, std::size_t alt, const std::vector<double>& prices)>;

namespace detail {

inline void probe_quasilinearity(const PriceScenario& ps, const PriceUtilityFn& fn,
                                 const std::vector<double>& prices) {
    const double mui = ps.marginal_utility_income;
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        for (std::size_t j = 0; j < prices.size(); ++j) {
            double delta = 1e-3 * (1.0 + std::abs(prices[j]));
            std::vector<double> p = prices;
            double f0 = fn(g, j, p);
            p[j] = prices[j] + delta;
            double f1 = fn(g, j, p);
            p[j] = prices[j] + 2.0 * delta;
            double f2 = fn(g, j, p);
            double s1 = (f1 - f0) / delta;
            double s2 = (f2 - f1) / delta;
            double tol = 1e-6 * (1.0 + std::abs(mui));
            if (std::abs(s1 + mui) > tol || std::abs(s2 + mui) > tol) {
                throw InvalidScenario("utility is not linear in own price with slope -mui for "
                                      "group " + std::to_string(g) + ", alternative " +
                                      std::to_string(j));
            }
            for (std::size_t k = 0; k < prices.size(); ++k) {
                if (k == j) continue;
                std::vector<double> q = prices;
                q[k] = prices[k] + 1e-3 * (1.0 + std::abs(prices[k]));
                double fx = fn(g, j, q);
                if (std::abs(fx - f0) > 1e-9 * (1.0 + std::abs(f0))) {
                    throw InvalidScenario("utility of alternative " + std::to_string(j) +
                                          " reacts to the price of alternative " +
                                          std::to_string(k));
                }
            }
        }
    }
}

} // namespace detail

// Bakes the price scenario into a discrete-choice scenario, first probing
// the utility (the canonical quasi-linear form if none is supplied) by
// finite differences: own-price response must be linear with slope -mui and
// cross-price response must be zero.
inline PumScenario to_choice_scenario(const PriceScenario& ps, const PriceUtilityFn& custom = {}) {
    if (!(ps.marginal_utility_income > 0.0) || !std::isfinite(ps.marginal_utility_income)) {
        throw InvalidScenario("marginal utility of income must be positive and finite");
    }
    std::size_t j_n = ps.price_before.size();
    if (j_n < 2 || ps.price_after.size() != j_n) {
        throw InvalidScenario("need matching before/after price vectors over >= 2 alternatives");
    }
    for (const auto& g : ps.groups) {
        if (g.h.size() != j_n) {
            throw InvalidScenario("h vectors must have one entry per alternative");
        }
    }
    PriceUtilityFn fn = custom;
    if (!fn) {
        fn = [&ps](std::size_t g, std::size_t j, const std::vector<double>& p) {
            return ps.groups[g].h[j] + ps.marginal_utility_income * (ps.income - p[j]);
        };
    }
    detail::probe_quasilinearity(ps, fn, ps.price_before);
    detail::probe_quasilinearity(ps, fn, ps.price_after);

    PumScenario sc;
    sc.n_alternatives = j_n;
    sc.noise = ps.noise;
    sc.groups.reserve(ps.groups.size());
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        PumGroup grp;
        grp.prob = ps.groups[g].prob;
        grp.util_before.reserve(j_n);
        grp.util_after.reserve(j_n);
        for (std::size_t j = 0; j < j_n; ++j) {
            grp.util_before.push_back(fn(g, j, ps.price_before));
            grp.util_after.push_back(fn(g, j, ps.price_after));
        }
        sc.groups.push_back(std::move(grp));
    }
    sc.validate();
    return sc;
}

// Individual compensating-variation draws: the coupled utility effect of
// the price change divided by the marginal utility of income.
struct CvDraws {
    std::vector<std::vector<double>> per_group;
    std::vector<double> group_means;
    std::vector<double> group_probs;
};

inline CvDraws individual_cv(const PriceScenario& ps, std::size_t n_per_group,
                             std::uint64_t seed, int threads = 1,
                             const PriceUtilityFn& custom = {}) {
    PumScenario choice = to_choice_scenario(ps, custom);
    TauDraws td = draw_tau(choice, n_per_group, seed, threads);
    CvDraws cv;
    cv.group_probs = td.group_probs;
    cv.per_group = std::move(td.per_group);
    double mui = ps.marginal_utility_income;
    for (auto& d : cv.per_group) {
        for (double& x : d) x /= mui;
    }
    cv.group_means.reserve(cv.per_group.size());
    for (const auto& d : cv.per_group) cv.group_means.push_back(draw_mean(d));
    return cv;
}

// Single-draw variant: the price-change utility effect for one noise
// realization, in money units.
inline double individual_cv(const PriceScenario& ps, std::size_t group,
                            const std::vector<double>& eps_draw,
                            const PriceUtilityFn& custom = {}) {
    PumScenario choice = to_choice_scenario(ps, custom);
    double after = indirect_utility(choice, group, PolicyState::After, eps_draw);
    double before = indirect_utility(choice, group, PolicyState::Before, eps_draw);
    return (after - before) / ps.marginal_utility_income;
}

inline WeightedSample average_cv_sample(const CvDraws& cv) {
    return WeightedSample::from_weighted(cv.group_means, cv.group_probs);
}

// Simulate-then-average convenience overload.
inline WeightedSample average_cv_sample(const PriceScenario& ps, std::size_t n_per_group,
                                        std::uint64_t seed, int threads = 1,
                                        const PriceUtilityFn& custom = {}) {
    return average_cv_sample(individual_cv(ps, n_per_group, seed, threads, custom));
}

/*!
 * Tail bounds linking individual and group-average compensating variation:
 * the individual-CV superquantile never exceeds the group-average one, and
 * when a per-draw gap bound mu is declared (and verified on every draw) it
 * is also at least the group-average value minus mu.  A degree-one
 * homogeneity cross-check on the same draws guards the money-metric
 * scaling.
 */
inline BoundReport check_prop3(const PriceScenario& ps, std::size_t n_per_group,
                               const std::vector<double>& betas, std::uint64_t seed,
                               int threads = 1, const PriceUtilityFn& custom = {}) {
    CvDraws cv = individual_cv(ps, n_per_group, seed, threads, custom);
    if (ps.has_slack_mu()) {
        if (!(ps.cv_slack_mu >= 0.0)) {
            throw InvalidSlackBound("cv_slack_mu must be nonnegative");
        }
        for (std::size_t g = 0; g < cv.per_group.size(); ++g) {
            for (double x : cv.per_group[g]) {
                double gap = cv.group_means[g] - x;
                if (gap > ps.cv_slack_mu + 1e-12 * (1.0 + std::abs(ps.cv_slack_mu))) {
                    throw InvalidSlackBound("draw CV gap " + std::to_string(gap) +
                                            " exceeds cv_slack_mu " +
                                            std::to_string(ps.cv_slack_mu));
                }
            }
        }
    }
    WeightedSample pooled = pooled_sample(cv.per_group, cv.group_probs);
    WeightedSample avg = average_cv_sample(cv);
    std::vector<double> mean_se;
    mean_se.reserve(cv.per_group.size());
    for (const auto& d : cv.per_group) mean_se.push_back(mean_standard_error(d));

    const double scale = 2.5;
    std::vector<double> scaled_values;
    scaled_values.reserve(pooled.size());
    for (double v : pooled.values()) scaled_values.push_back(scale * v);
    WeightedSample scaled =
        WeightedSample::from_weighted(std::move(scaled_values), pooled.weights());

    BoundReport report;
    for (double b : betas) {
        auto ind = lower_superquantile(pooled, BetaLevel{b});
        auto agg = lower_superquantile(avg, BetaLevel{b});
        double se_ind = grouped_lower_sq_se(cv.per_group, cv.group_probs, ind.lambda_star, b);
        double se_agg = aggregate_lower_sq_se(cv.group_means, cv.group_probs, mean_se, b);
        double se = combine_se(se_ind, se_agg);
        report.records.push_back(make_bound_record("cv_individual_le_group_mean_tail", b,
                                                   Tail::Lower, ind.value, {agg.value}, se));
        if (ps.has_slack_mu()) {
            report.records.push_back(
                make_bound_record("cv_group_mean_tail_minus_mu_le_individual", b, Tail::Lower,
                                  agg.value - ps.cv_slack_mu, {ind.value}, se));
        }
        double scaled_sq = lower_superquantile(scaled, BetaLevel{b}).value;
        report.records.push_back(make_equality_record("cv_tail_homogeneity_degree_one", b,
                                                      Tail::Lower, scaled_sq, scale * ind.value,
                                                      0.0));
    }
    return report;
}

} // namespace welfare

#endif
