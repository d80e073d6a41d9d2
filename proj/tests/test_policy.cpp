#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "welfare/policy.hpp"

using welfare::BetaLevel;
using welfare::PolicyGroup;
using welfare::PolicyRule;
using welfare::PolicyScenario;
using welfare::SubstreamRng;

namespace {

double mte_fn(std::size_t g, double u) {
    return g == 0 ? 1.0 - 2.0 * u : 0.5 - 0.2 * u;
}

welfare::PolicyScenario example_scenario() {
    std::vector<PolicyGroup> groups = {{0.6, 0.7, 1.0}, {0.4, 0.3, 0.5}};
    auto outcomes = [](std::size_t g, double u, SubstreamRng& rng) {
        double base = g == 0 ? 1.0 : 0.5;
        double v0 = base + 0.4 * rng.normal();
        double v1 = v0 + mte_fn(g, u) + 0.4 * rng.normal();
        return std::pair<double, double>{v0, v1};
    };
    return welfare::make_policy_scenario(groups, mte_fn, outcomes);
}

} // namespace

TEST_CASE("scenario construction cross-checks the declared margins") {
    CHECK_NOTHROW(example_scenario());

    std::vector<PolicyGroup> groups = {{0.6, 0.7, 1.0}, {0.4, 0.3, 0.5}};

    SECTION("outcomes inconsistent with the declared conditional effect") {
        auto outcomes = [](std::size_t, double, SubstreamRng& rng) {
            double v0 = 1.0 + 0.4 * rng.normal();
            return std::pair<double, double>{v0, v0 + 3.0}; // constant effect of 3
        };
        CHECK_THROWS_AS(welfare::make_policy_scenario(groups, mte_fn, outcomes),
                        welfare::InvalidScenario);
    }

    SECTION("outcomes inconsistent with the declared baseline mean") {
        auto outcomes = [](std::size_t g, double u, SubstreamRng& rng) {
            double v0 = 9.0 + 0.4 * rng.normal();
            return std::pair<double, double>{v0, v0 + mte_fn(g, u)};
        };
        CHECK_THROWS_AS(welfare::make_policy_scenario(groups, mte_fn, outcomes),
                        welfare::InvalidScenario);
    }

    SECTION("shape validation") {
        std::vector<PolicyGroup> bad = {{0.6, 1.4, 1.0}};
        auto outcomes = [](std::size_t, double, SubstreamRng&) {
            return std::pair<double, double>{0.0, 0.0};
        };
        CHECK_THROWS_AS(welfare::make_policy_scenario(bad, mte_fn, outcomes),
                        welfare::InvalidScenario);
    }
}

TEST_CASE("rule validation") {
    PolicyRule r{"short", {1}};
    CHECK_THROWS_AS(r.validate(2), welfare::GroupMismatch);
    PolicyRule fractional{"frac", {1, 2}};
    CHECK_THROWS_AS(fractional.validate(2), welfare::BadConfig);
    PolicyRule ok{"ok", {1, 0}};
    CHECK_NOTHROW(ok.validate(2));
}

TEST_CASE("rank integral of a linear conditional effect") {
    auto ps = example_scenario();
    CHECK(welfare::mte_rank_integral(ps, 0) == Catch::Approx(1.0 - 1.0).margin(1e-7));
    CHECK(welfare::mte_rank_integral(ps, 1) == Catch::Approx(0.5 - 0.1).margin(1e-7));
}

TEST_CASE("realized tail value never exceeds conditional tail welfare") {
    auto ps = example_scenario();
    for (PolicyRule rule : {PolicyRule{"all", {1, 1}}, PolicyRule{"none", {0, 0}},
                            PolicyRule{"first", {1, 0}}}) {
        auto report = welfare::check_theorem3(ps, rule, 20000, {0.1, 0.25, 0.5}, 42, 1);
        bool saw_mean_identity = false;
        for (const auto& r : report.records) {
            INFO(rule.name << ": " << r.check << " at level " << r.level);
            CHECK_FALSE(r.violated);
            if (r.check == "mean_value_matches_welfare_representation") {
                saw_mean_identity = true;
            }
        }
        CHECK(saw_mean_identity);
    }
}

TEST_CASE("rule contrasts are bounded by the marginal contrast tail") {
    auto ps = example_scenario();
    PolicyRule all{"all", {1, 1}};
    PolicyRule none{"none", {0, 0}};
    PolicyRule first{"first", {1, 0}};
    for (auto [from, to] : {std::pair{none, all}, std::pair{all, none},
                            std::pair{first, all}}) {
        auto report = welfare::check_prop4(ps, from, to, 20000, {0.1, 0.25, 0.5}, 42, 1);
        for (const auto& r : report.records) {
            INFO(from.name << "->" << to.name << " " << r.check << " level " << r.level);
            CHECK_FALSE(r.violated);
            CHECK(r.check == "rule_contrast_le_marginal_contrast_tail");
        }
    }
}

TEST_CASE("self-selection rate matches the declared propensity") {
    auto ps = example_scenario();
    auto report = welfare::check_selection_consistency(ps, 40000, 42, 1);
    REQUIRE(report.records.size() == 2);
    for (const auto& r : report.records) {
        INFO(r.check << " for cell " << r.level);
        CHECK(r.check == "self_selection_rate_matches_propensity");
        CHECK_FALSE(r.violated);
    }
}

TEST_CASE("regret ranks rules by conditional tail welfare") {
    auto ps = example_scenario();
    std::vector<PolicyRule> rules = {{"none", {0, 0}}, {"all", {1, 1}}, {"first", {1, 0}}};
    const double beta = 0.25;
    auto rep = welfare::regret_report(ps, rules, BetaLevel{beta}, 20000, 42, 1);
    REQUIRE(rep.entries.size() == 3);
    // Descending conditional welfare, best first with zero regret bound.
    CHECK(rep.entries[0].regret_bound_vs_best == 0.0);
    for (std::size_t i = 1; i < rep.entries.size(); ++i) {
        CHECK(rep.entries[i - 1].conditional_tail_welfare >=
              rep.entries[i].conditional_tail_welfare - 1e-12);
    }
    // Each bound is the marginal-contrast tail of switching to the best
    // rule, so it must sit above the coupled per-draw contrast tail.
    const PolicyRule* best = nullptr;
    for (const auto& rule : rules) {
        if (rule.name == rep.entries[0].rule_name) best = &rule;
    }
    REQUIRE(best != nullptr);
    for (std::size_t i = 1; i < rep.entries.size(); ++i) {
        const PolicyRule* cur = nullptr;
        for (const auto& rule : rules) {
            if (rule.name == rep.entries[i].rule_name) cur = &rule;
        }
        REQUIRE(cur != nullptr);
        auto check = welfare::check_prop4(ps, *cur, *best, 20000, {beta}, 42, 1);
        REQUIRE(check.records.size() == 1);
        CHECK_FALSE(check.records[0].violated);
        CHECK(check.records[0].rhs[0] ==
              Catch::Approx(rep.entries[i].regret_bound_vs_best).margin(1e-12));
    }
}
