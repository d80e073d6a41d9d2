#ifndef WELFARE_POLICY_HPP
#define WELFARE_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "welfare/errors.hpp"
#include "welfare/math.hpp"
#include "welfare/mc_stats.hpp"
#include "welfare/parallel.hpp"
#include "welfare/report.hpp"
#include "welfare/rng.hpp"
#include "welfare/superquantile.hpp"

namespace welfare {

// One instrument cell z: its population share, the self-selection
// propensity P(D = 1 | Z = z), and the analytic baseline mean E[V0 | Z = z].
struct PolicyGroup {
    double prob = 0.0;
    double propensity = 0.5;
    double mean_v0 = 0.0;
};

// Generator of potential outcomes (V0, V1) given the cell index, the
// selection rank eps, and a substream for any extra outcome noise.
using OutcomeFn = std::function<std::pair<double, double>(std::size_t, double, SubstreamRng&)>;

// Conditional mean effect E[V1 - V0 | cell, eps].
using MteFn = std::function<double(std::size_t, double)>;

/*!
 * Selection-on-a-uniform-rank scenario: individuals in cell z self-select
 * via D = 1{propensity(z) >= eps} with eps uniform on (0, 1), and the
 * declared marginal effect function must reproduce the generator's
 * conditional mean effect at every rank.  Instances should be built through
 * make_policy_scenario, which verifies exactly that.
 */
struct PolicyScenario {
    std::vector<PolicyGroup> groups;
    MteFn mte;
    OutcomeFn outcomes;

    void validate_shape() const {
        if (groups.empty()) throw InvalidScenario("need at least one cell");
        if (!mte || !outcomes) throw InvalidScenario("mte and outcome functions are required");
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& grp = groups[g];
            if (!(grp.prob > 0.0) || !std::isfinite(grp.prob)) {
                throw InvalidScenario("cell " + std::to_string(g) +
                                      " needs a positive, finite probability");
            }
            if (!(grp.propensity >= 0.0 && grp.propensity <= 1.0)) {
                throw InvalidScenario("cell " + std::to_string(g) +
                                      " propensity must lie in [0, 1]");
            }
            if (!std::isfinite(grp.mean_v0)) {
                throw InvalidScenario("cell " + std::to_string(g) + " mean_v0 must be finite");
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

// Deterministic assignment rule: one 0/1 entry per cell.
struct PolicyRule {
    std::string name;
    std::vector<int> assign;

    void validate(std::size_t n_groups) const {
        if (assign.size() != n_groups) {
            throw GroupMismatch("rule '" + name + "' must assign every cell");
        }
        for (int a : assign) {
            if (a != 0 && a != 1) throw BadConfig("rule '" + name + "' entries must be 0 or 1");
        }
    }
};

namespace detail {

inline constexpr std::uint64_t policy_stream = 0x9071;
inline constexpr std::uint64_t policy_check_stream = 0x9072;

} // namespace detail

// Builds a scenario after checking, cell by cell on a rank grid, that the
// declared marginal effect matches the generator's conditional Monte Carlo
// mean within three standard errors, and that mean_v0 matches the
// generator's unconditional baseline mean.
inline PolicyScenario make_policy_scenario(std::vector<PolicyGroup> groups, MteFn mte,
                                           OutcomeFn outcomes, std::size_t n_check = 4000,
                                           std::uint64_t seed = 0x5eed) {
    PolicyScenario ps;
    ps.groups = std::move(groups);
    ps.mte = std::move(mte);
    ps.outcomes = std::move(outcomes);
    ps.validate_shape();
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        for (int step = 1; step <= 9; ++step) {
            double ebar = 0.1 * step;
            std::vector<double> gaps(n_check);
            for (std::size_t i = 0; i < n_check; ++i) {
                SubstreamRng rng(SubstreamRng::derive_key(seed, detail::policy_check_stream, g,
                                                          i * 16 + static_cast<std::size_t>(step)));
                auto [v0, v1] = ps.outcomes(g, ebar, rng);
                gaps[i] = v1 - v0;
            }
            double m = draw_mean(gaps);
            double se = mean_standard_error(gaps);
            double want = ps.mte(g, ebar);
            if (std::abs(m - want) > 3.0 * se + 1e-9 * (1.0 + std::abs(want))) {
                throw InvalidScenario("declared marginal effect at cell " + std::to_string(g) +
                                      ", rank " + std::to_string(ebar) +
                                      " is inconsistent with the outcome generator (" +
                                      std::to_string(want) + " vs " + std::to_string(m) + ")");
            }
        }
        std::vector<double> base(n_check);
        for (std::size_t i = 0; i < n_check; ++i) {
            SubstreamRng rng(SubstreamRng::derive_key(seed, detail::policy_check_stream, g,
                                                      1000000 + i));
            base[i] = ps.outcomes(g, rng.uniform01(), rng).first;
        }
        double m = draw_mean(base);
        double se = mean_standard_error(base);
        if (std::abs(m - ps.groups[g].mean_v0) > 3.0 * se + 1e-9 * (1.0 + std::abs(m))) {
            throw InvalidScenario("declared mean_v0 at cell " + std::to_string(g) +
                                  " is inconsistent with the outcome generator");
        }
    }
    return ps;
}

// Potential-outcome draws shared by every rule, so rule comparisons couple
// on common random numbers by construction.
struct PolicyDraws {
    std::vector<std::vector<double>> v0;
    std::vector<std::vector<double>> v1;
    std::vector<double> group_probs;
    std::vector<double> selection_rate; // empirical share with propensity >= eps
    std::size_t n_per_group = 0;
};

inline PolicyDraws draw_potential_outcomes(const PolicyScenario& ps, std::size_t n_per_group,
                                           std::uint64_t seed, int threads = 1) {
    ps.validate_shape();
    if (n_per_group == 0) throw BadConfig("n_per_group must be positive");
    PolicyDraws pd;
    pd.group_probs = ps.normalized_probs();
    pd.n_per_group = n_per_group;
    pd.v0.assign(ps.groups.size(), std::vector<double>(n_per_group));
    pd.v1.assign(ps.groups.size(), std::vector<double>(n_per_group));
    pd.selection_rate.resize(ps.groups.size());
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        std::vector<double> selected(n_per_group, 0.0);
        parallel_for(n_per_group, threads, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                SubstreamRng rng(SubstreamRng::derive_key(seed, detail::policy_stream, g, i));
                double eps = rng.uniform01();
                auto [a, b] = ps.outcomes(g, eps, rng);
                pd.v0[g][i] = a;
                pd.v1[g][i] = b;
                selected[i] = ps.groups[g].propensity >= eps ? 1.0 : 0.0;
            }
        });
        pd.selection_rate[g] = draw_mean(selected);
    }
    return pd;
}

namespace detail {

inline std::vector<std::vector<double>> realized_values(const PolicyDraws& pd,
                                                        const PolicyRule& rule) {
    std::vector<std::vector<double>> out(pd.v0.size());
    for (std::size_t g = 0; g < pd.v0.size(); ++g) {
        out[g].resize(pd.v0[g].size());
        for (std::size_t i = 0; i < pd.v0[g].size(); ++i) {
            out[g][i] = rule.assign[g] == 1 ? pd.v1[g][i] : pd.v0[g][i];
        }
    }
    return out;
}

} // namespace detail

// Pooled distribution of realized values V0 + assign * (V1 - V0).
inline WeightedSample simulate_outcomes(const PolicyScenario& ps, const PolicyRule& rule,
                                        std::size_t n_per_group, std::uint64_t seed,
                                        int threads = 1) {
    rule.validate(ps.groups.size());
    PolicyDraws pd = draw_potential_outcomes(ps, n_per_group, seed, threads);
    return pooled_sample(detail::realized_values(pd, rule), pd.group_probs);
}

// Integral of the marginal effect over all ranks, by adaptive quadrature.
inline double mte_rank_integral(const PolicyScenario& ps, std::size_t g, double tol = 1e-8) {
    return adaptive_simpson([&](double e) { return ps.mte(g, e); }, 0.0, 1.0, tol);
}

// Cell-level conditional welfare of a rule: mean_v0 + assign * integral of
// the marginal effect.  This side is analytic, with no Monte Carlo error.
inline WeightedSample conditional_welfare_sample(const PolicyScenario& ps,
                                                 const PolicyRule& rule, double tol = 1e-8) {
    ps.validate_shape();
    rule.validate(ps.groups.size());
    std::vector<double> vals;
    vals.reserve(ps.groups.size());
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        double w = ps.groups[g].mean_v0;
        if (rule.assign[g] == 1) w += mte_rank_integral(ps, g, tol);
        vals.push_back(w);
    }
    return WeightedSample::from_weighted(std::move(vals), ps.normalized_probs());
}

// Lower tail bound per level: the realized-value superquantile is at most
// the conditional-welfare superquantile.  Also reports the exact mean
// identity between the two sides as a two-sided check.
inline BoundReport check_theorem3(const PolicyScenario& ps, const PolicyRule& rule,
                                  std::size_t n_per_group, const std::vector<double>& betas,
                                  std::uint64_t seed, int threads = 1) {
    rule.validate(ps.groups.size());
    PolicyDraws pd = draw_potential_outcomes(ps, n_per_group, seed, threads);
    auto realized = detail::realized_values(pd, rule);
    WeightedSample pooled = pooled_sample(realized, pd.group_probs);
    WeightedSample cond = conditional_welfare_sample(ps, rule);
    BoundReport report;
    for (double b : betas) {
        auto lhs = lower_superquantile(pooled, BetaLevel{b});
        auto rhs = lower_superquantile(cond, BetaLevel{b});
        double se = grouped_lower_sq_se(realized, pd.group_probs, lhs.lambda_star, b);
        report.records.push_back(make_bound_record("realized_value_le_conditional_welfare_tail",
                                                   b, Tail::Lower, lhs.value, {rhs.value}, se));
    }
    double mean_var = 0.0;
    for (std::size_t g = 0; g < realized.size(); ++g) {
        double se_g = mean_standard_error(realized[g]);
        mean_var += pd.group_probs[g] * pd.group_probs[g] * se_g * se_g;
    }
    report.records.push_back(make_equality_record("mean_value_matches_welfare_representation",
                                                  1.0, Tail::Lower, pooled.mean(), cond.mean(),
                                                  std::sqrt(mean_var)));
    return report;
}

// Rule-contrast bound on common draws: the superquantile of the realized
// contrast (to - from) is at most the superquantile of the cell-level
// marginal-effect contrast.
inline BoundReport check_prop4(const PolicyScenario& ps, const PolicyRule& rule_from,
                               const PolicyRule& rule_to, std::size_t n_per_group,
                               const std::vector<double>& betas, std::uint64_t seed,
                               int threads = 1) {
    rule_from.validate(ps.groups.size());
    rule_to.validate(ps.groups.size());
    PolicyDraws pd = draw_potential_outcomes(ps, n_per_group, seed, threads);
    std::vector<std::vector<double>> delta(pd.v0.size());
    std::vector<double> contrast(ps.groups.size());
    for (std::size_t g = 0; g < pd.v0.size(); ++g) {
        int d = rule_to.assign[g] - rule_from.assign[g];
        delta[g].resize(pd.v0[g].size());
        for (std::size_t i = 0; i < pd.v0[g].size(); ++i) {
            delta[g][i] = d * (pd.v1[g][i] - pd.v0[g][i]);
        }
        contrast[g] = d * mte_rank_integral(ps, g);
    }
    WeightedSample pooled = pooled_sample(delta, pd.group_probs);
    WeightedSample agg = WeightedSample::from_weighted(contrast, pd.group_probs);
    BoundReport report;
    for (double b : betas) {
        auto lhs = lower_superquantile(pooled, BetaLevel{b});
        auto rhs = lower_superquantile(agg, BetaLevel{b});
        double se = grouped_lower_sq_se(delta, pd.group_probs, lhs.lambda_star, b);
        report.records.push_back(make_bound_record("rule_contrast_le_marginal_contrast_tail", b,
                                                   Tail::Lower, lhs.value, {rhs.value}, se));
    }
    return report;
}

// Diagnostic: the empirical self-selection rate of every cell must match
// its declared propensity within Monte Carlo error.
inline BoundReport check_selection_consistency(const PolicyScenario& ps, std::size_t n_per_group,
                                               std::uint64_t seed, int threads = 1) {
    PolicyDraws pd = draw_potential_outcomes(ps, n_per_group, seed, threads);
    BoundReport report;
    for (std::size_t g = 0; g < ps.groups.size(); ++g) {
        double p = ps.groups[g].propensity;
        double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) /
                              static_cast<double>(n_per_group));
        report.records.push_back(make_equality_record("self_selection_rate_matches_propensity",
                                                      static_cast<double>(g), Tail::Lower,
                                                      pd.selection_rate[g], p, se));
    }
    return report;
}

struct RegretEntry {
    std::string rule_name;
    double conditional_tail_welfare = 0.0;
    double realized_tail_welfare = 0.0;
    double regret_bound_vs_best = 0.0;
};

struct RegretReport {
    double beta = 0.0;
    std::vector<RegretEntry> entries; // sorted by conditional tail welfare, best first
};

// Ranks rules by the superquantile of their conditional welfare and bounds
// each rule's tail regret against the top-ranked rule by the
// marginal-effect contrast superquantile.
inline RegretReport regret_report(const PolicyScenario& ps, const std::vector<PolicyRule>& rules,
                                  BetaLevel beta, std::size_t n_per_group, std::uint64_t seed,
                                  int threads = 1) {
    if (rules.empty()) throw BadConfig("need at least one rule");
    PolicyDraws pd = draw_potential_outcomes(ps, n_per_group, seed, threads);
    std::vector<double> probs = ps.normalized_probs();
    RegretReport rep;
    rep.beta = beta.value();
    std::vector<std::size_t> order(rules.size());
    std::vector<double> cond_sq(rules.size());
    std::vector<double> realized_sq(rules.size());
    for (std::size_t r = 0; r < rules.size(); ++r) {
        rules[r].validate(ps.groups.size());
        cond_sq[r] = lower_superquantile(conditional_welfare_sample(ps, rules[r]), beta).value;
        WeightedSample pooled = pooled_sample(detail::realized_values(pd, rules[r]), probs);
        realized_sq[r] = lower_superquantile(pooled, beta).value;
        order[r] = r;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cond_sq[a] > cond_sq[b]; });
    std::size_t best = order[0];
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        std::size_t r = order[rank];
        std::vector<double> contrast(ps.groups.size());
        for (std::size_t g = 0; g < ps.groups.size(); ++g) {
            int d = rules[best].assign[g] - rules[r].assign[g];
            contrast[g] = d == 0 ? 0.0 : d * mte_rank_integral(ps, g);
        }
        double bound =
            lower_superquantile(WeightedSample::from_weighted(contrast, probs), beta).value;
        rep.entries.push_back({rules[r].name, cond_sq[r], realized_sq[r], bound});
    }
    return rep;
}

} // namespace welfare

#endif
