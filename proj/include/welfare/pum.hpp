#ifndef WELFARE_PUM_HPP
#define WELFARE_PUM_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/mc_stats.hpp"
#include "welfare/parallel.hpp"
#include "welfare/report.hpp"
#include "welfare/rng.hpp"
#include "welfare/superquantile.hpp"
#include "welfare/weighted_sample.hpp"

namespace welfare {

enum class PolicyState { Before, After };

// One covariate cell: its population share and the systematic utility of
// each alternative under both policy states.
struct PumGroup {
    double prob = 0.0;
    std::vector<double> util_before;
    std::vector<double> util_after;
};

/*!
 * Discrete-choice random-utility scenario.  An agent in group x facing
 * policy state t picks the alternative maximizing u_j(x, t) + eps_j, where
 * the taste vector eps has one fixed marginal per alternative, identical
 * under both policy states, so before/after welfare comparisons couple on
 * common draws.
 */
struct PumScenario {
    std::size_t n_alternatives = 0;
    std::vector<PumGroup> groups;
    std::vector<NoiseSpec> noise; // one spec per alternative

    void validate() const {
        if (n_alternatives < 2) throw InvalidScenario("need at least two alternatives");
        if (groups.empty()) throw InvalidScenario("need at least one covariate group");
        if (noise.size() != n_alternatives) {
            throw InvalidScenario("noise specs must match the number of alternatives");
        }
        for (const auto& ns : noise) ns.validate();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& grp = groups[g];
            if (!(grp.prob > 0.0) || !std::isfinite(grp.prob)) {
                throw InvalidScenario("group " + std::to_string(g) +
                                      " needs a positive, finite probability");
            }
            if (grp.util_before.size() != n_alternatives ||
                grp.util_after.size() != n_alternatives) {
                throw InvalidScenario("group " + std::to_string(g) +
                                      " utility vectors must have one entry per alternative");
            }
            for (double u : grp.util_before) {
                if (!std::isfinite(u)) throw InvalidScenario("non-finite utility");
            }
            for (double u : grp.util_after) {
                if (!std::isfinite(u)) throw InvalidScenario("non-finite utility");
            }
        }
    }

    std::vector<double> normalized_probs() const {
        double total = 0.0;
        for (const auto& g : groups) total += g.prob;
        std::vector<double> p;
        p.reserve(groups.size());
        for (const auto& g : groups) p.push_back(g.prob / total);
        return p;
    }
};

namespace detail {

inline constexpr std::uint64_t tau_stream = 0x7441;
inline constexpr std::uint64_t wbeta_stream = 0x7442;
inline constexpr std::uint64_t coupled_stream = 0x7443;

inline double max_utility(const std::vector<double>& base, const std::vector<double>& eps) {
    double best = base[0] + eps[0];
    for (std::size_t j = 1; j < base.size(); ++j) {
        double u = base[j] + eps[j];
        if (u > best) best = u;
    }
    return best;
}

inline void sample_noise(const PumScenario& sc, SubstreamRng& rng, std::vector<double>& eps) {
    for (std::size_t j = 0; j < sc.noise.size(); ++j) eps[j] = sc.noise[j].sample(rng);
}

} // namespace detail

// Realized indirect utility max_j u_j(x, t) + eps_j for one taste draw.
inline double indirect_utility(const PumScenario& sc, std::size_t group, PolicyState state,
                               const std::vector<double>& eps) {
    sc.validate();
    if (group >= sc.groups.size()) {
        throw InvalidCovariate("group index " + std::to_string(group) + " out of range");
    }
    if (eps.size() != sc.n_alternatives) {
        throw LengthMismatch("eps vector must have one entry per alternative");
    }
    const auto& grp = sc.groups[group];
    return detail::max_utility(state == PolicyState::Before ? grp.util_before : grp.util_after,
                               eps);
}

// Per-group Monte Carlo draws of the individual welfare effect
// tau = max_j(u_after_j + eps_j) - max_j(u_before_j + eps_j), with the same
// taste draw on both sides.
struct TauDraws {
    std::vector<std::vector<double>> per_group;
    std::vector<double> group_means;
    std::vector<double> group_probs;
};

inline TauDraws draw_tau(const PumScenario& sc, std::size_t n_per_group, std::uint64_t seed,
                         int threads = 1) {
    sc.validate();
    if (n_per_group == 0) throw BadConfig("n_per_group must be positive");
    TauDraws td;
    td.group_probs = sc.normalized_probs();
    td.per_group.assign(sc.groups.size(), std::vector<double>(n_per_group));
    td.group_means.resize(sc.groups.size());
    for (std::size_t g = 0; g < sc.groups.size(); ++g) {
        auto& out = td.per_group[g];
        const auto& grp = sc.groups[g];
        parallel_for(n_per_group, threads, [&](std::size_t lo, std::size_t hi) {
            std::vector<double> eps(sc.n_alternatives);
            for (std::size_t i = lo; i < hi; ++i) {
                SubstreamRng rng(SubstreamRng::derive_key(seed, detail::tau_stream, g, i));
                detail::sample_noise(sc, rng, eps);
                out[i] = detail::max_utility(grp.util_after, eps) -
                         detail::max_utility(grp.util_before, eps);
            }
        });
        td.group_means[g] = draw_mean(out);
    }
    return td;
}

// Pooled distribution of the individual effect draws.
inline WeightedSample pooled_tau_sample(const TauDraws& td) {
    return pooled_sample(td.per_group, td.group_probs);
}

// Distribution of the group-mean effects under explicit group weights.
inline WeightedSample conditional_cate_sample(const TauDraws& td,
                                              const std::vector<double>& group_probs) {
    if (group_probs.size() != td.group_means.size()) {
        throw GroupMismatch("group probabilities do not match the number of groups");
    }
    return WeightedSample::from_weighted(td.group_means, group_probs);
}

namespace detail {

inline std::vector<double> group_mean_ses(const TauDraws& td) {
    std::vector<double> se;
    se.reserve(td.per_group.size());
    for (const auto& d : td.per_group) se.push_back(mean_standard_error(d));
    return se;
}

} // namespace detail

// Lower tail bound: at every beta the superquantile of the individual
// effects is at most the superquantile of the group-mean effects.
inline BoundReport check_theorem1(const PumScenario& sc, std::size_t n_per_group,
                                  const std::vector<double>& betas, std::uint64_t seed,
                                  int threads = 1) {
    TauDraws td = draw_tau(sc, n_per_group, seed, threads);
    WeightedSample pooled = pooled_tau_sample(td);
    WeightedSample cate = conditional_cate_sample(td, td.group_probs);
    std::vector<double> mean_se = detail::group_mean_ses(td);
    BoundReport report;
    for (double b : betas) {
        auto lhs = lower_superquantile(pooled, BetaLevel{b});
        auto rhs = lower_superquantile(cate, BetaLevel{b});
        double se_lhs = grouped_lower_sq_se(td.per_group, td.group_probs, lhs.lambda_star, b);
        double se_rhs = aggregate_lower_sq_se(td.group_means, td.group_probs, mean_se, b);
        report.records.push_back(make_bound_record("individual_le_group_mean_tail", b,
                                                   Tail::Lower, lhs.value, {rhs.value},
                                                   combine_se(se_lhs, se_rhs)));
    }
    return report;
}

// Lower sandwich: when every draw satisfies mean - tau <= gamma, the
// individual-effect superquantile is at least the group-mean superquantile
// minus gamma.  The gamma premise is verified on every draw first.
inline BoundReport check_theorem2(const PumScenario& sc, double gamma, std::size_t n_per_group,
                                  const std::vector<double>& betas, std::uint64_t seed,
                                  int threads = 1) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidSlackBound("gamma must be finite and nonnegative");
    }
    TauDraws td = draw_tau(sc, n_per_group, seed, threads);
    for (std::size_t g = 0; g < td.per_group.size(); ++g) {
        for (double t : td.per_group[g]) {
            double gap = td.group_means[g] - t;
            if (gap > gamma + 1e-12 * (1.0 + std::abs(gamma))) {
                throw InvalidSlackBound("draw gap " + std::to_string(gap) +
                                        " exceeds the stated bound " + std::to_string(gamma));
            }
        }
    }
    WeightedSample pooled = pooled_tau_sample(td);
    WeightedSample cate = conditional_cate_sample(td, td.group_probs);
    std::vector<double> mean_se = detail::group_mean_ses(td);
    BoundReport report;
    for (double b : betas) {
        auto ind = lower_superquantile(pooled, BetaLevel{b});
        auto agg = lower_superquantile(cate, BetaLevel{b});
        double se_lhs = aggregate_lower_sq_se(td.group_means, td.group_probs, mean_se, b);
        double se_rhs = grouped_lower_sq_se(td.per_group, td.group_probs, ind.lambda_star, b);
        // Oriented as lower bound: agg - gamma <= ind.
        report.records.push_back(make_bound_record("group_mean_tail_minus_gamma_le_individual",
                                                   b, Tail::Lower, agg.value - gamma,
                                                   {ind.value}, combine_se(se_lhs, se_rhs)));
    }
    return report;
}

// Monte Carlo estimate of the beta-tail welfare of one group under one
// policy state.
inline double w_beta(const PumScenario& sc, std::size_t group, PolicyState state, BetaLevel beta,
                     std::size_t n, std::uint64_t seed, int threads = 1) {
    sc.validate();
    if (group >= sc.groups.size()) {
        throw InvalidCovariate("group index " + std::to_string(group) + " out of range");
    }
    if (n == 0) throw BadConfig("n must be positive");
    const auto& base =
        state == PolicyState::Before ? sc.groups[group].util_before : sc.groups[group].util_after;
    std::vector<double> draws(n);
    parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> eps(sc.n_alternatives);
        for (std::size_t i = lo; i < hi; ++i) {
            SubstreamRng rng(SubstreamRng::derive_key(seed, detail::wbeta_stream, group, i));
            detail::sample_noise(sc, rng, eps);
            draws[i] = detail::max_utility(base, eps);
        }
    });
    return lower_superquantile(WeightedSample::from_values(std::move(draws)), beta).value;
}

/*!
 * Finite-sample checks of the tail-welfare function on coupled draws:
 * monotone in beta, equal to the sample minimum once beta reaches the
 * smallest draw weight, bounded above by the mean and below by the mean
 * minus sd/sqrt(beta), and Lipschitz across covariate groups with constant
 * E|delta|/beta under common taste draws.
 */
inline BoundReport check_appendix_properties(const PumScenario& sc, std::size_t group_a,
                                             std::size_t group_b, PolicyState state,
                                             const std::vector<double>& betas, std::size_t n,
                                             std::uint64_t seed, int threads = 1) {
    sc.validate();
    if (group_a >= sc.groups.size() || group_b >= sc.groups.size()) {
        throw InvalidCovariate("group index out of range");
    }
    if (n == 0) throw BadConfig("n must be positive");
    const auto& base_a =
        state == PolicyState::Before ? sc.groups[group_a].util_before : sc.groups[group_a].util_after;
    const auto& base_b =
        state == PolicyState::Before ? sc.groups[group_b].util_before : sc.groups[group_b].util_after;
    std::vector<double> draws_a(n);
    std::vector<double> draws_b(n);
    std::vector<double> abs_delta(n);
    parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> eps(sc.n_alternatives);
        for (std::size_t i = lo; i < hi; ++i) {
            SubstreamRng rng(SubstreamRng::derive_key(seed, detail::coupled_stream, i));
            detail::sample_noise(sc, rng, eps);
            draws_a[i] = detail::max_utility(base_a, eps);
            draws_b[i] = detail::max_utility(base_b, eps);
            abs_delta[i] = std::abs(draws_a[i] - draws_b[i]);
        }
    });
    WeightedSample sample_a = WeightedSample::from_values(draws_a);
    WeightedSample sample_b = WeightedSample::from_values(draws_b);
    double mean_a = sample_a.mean();
    double sd_a = std::sqrt(sample_a.variance());
    double mean_abs_delta = draw_mean(abs_delta);

    BoundReport report;
    double prev_beta = 0.0;
    double prev_val = 0.0;
    bool have_prev = false;
    for (double b : betas) {
        double wb_a = lower_superquantile(sample_a, BetaLevel{b}).value;
        double wb_b = lower_superquantile(sample_b, BetaLevel{b}).value;
        report.records.push_back(
            make_bound_record("tail_welfare_le_mean", b, Tail::Lower, wb_a, {mean_a}, 0.0));
        report.records.push_back(make_bound_record("tail_welfare_ge_mean_minus_sd_floor", b,
                                                   Tail::Lower, mean_a - sd_a / std::sqrt(b),
                                                   {wb_a}, 0.0));
        report.records.push_back(make_bound_record("tail_welfare_lipschitz_in_covariate", b,
                                                   Tail::Lower, std::abs(wb_a - wb_b),
                                                   {mean_abs_delta / b}, 0.0));
        if (have_prev && prev_beta < b) {
            report.records.push_back(make_bound_record("tail_welfare_monotone_in_beta", b,
                                                       Tail::Lower, prev_val, {wb_a}, 0.0));
        }
        prev_beta = b;
        prev_val = wb_a;
        have_prev = true;
    }
    double beta_floor = 1.0 / static_cast<double>(n);
    double wb_min = lower_superquantile(sample_a, BetaLevel{beta_floor}).value;
    report.records.push_back(make_equality_record("tail_welfare_limit_is_min", beta_floor,
                                                  Tail::Lower, wb_min, sample_a.min(), 0.0));
    return report;
}

} // namespace welfare

#endif
