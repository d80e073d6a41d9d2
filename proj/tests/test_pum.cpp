#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "welfare/pum.hpp"

using welfare::NoiseSpec;
using welfare::PolicyState;
using welfare::PumGroup;
using welfare::PumScenario;

namespace {

PumScenario two_group_gumbel() {
    PumScenario sc;
    sc.n_alternatives = 2;
    sc.noise = {NoiseSpec::gumbel(), NoiseSpec::gumbel()};
    sc.groups.push_back(PumGroup{0.6, {0.0, 0.0}, {0.0, 1.0}});
    sc.groups.push_back(PumGroup{0.4, {0.5, 0.0}, {1.5, 0.0}});
    return sc;
}

PumScenario bounded_noise_scenario() {
    PumScenario sc;
    sc.n_alternatives = 3;
    sc.noise = {NoiseSpec::uniform(-0.5, 0.5), NoiseSpec::uniform(-0.5, 0.5),
                NoiseSpec::uniform(-0.5, 0.5)};
    sc.groups.push_back(PumGroup{0.5, {0.0, 0.2, -0.1}, {0.3, 0.6, 0.0}});
    sc.groups.push_back(PumGroup{0.3, {0.1, 0.0, 0.0}, {0.2, 0.5, 0.1}});
    sc.groups.push_back(PumGroup{0.2, {0.0, 0.0, 0.4}, {0.1, 0.3, 0.9}});
    return sc;
}

} // namespace

TEST_CASE("scenario validation") {
    PumScenario sc = two_group_gumbel();
    CHECK_NOTHROW(sc.validate());
    PumScenario bad = sc;
    bad.n_alternatives = 1;
    CHECK_THROWS_AS(bad.validate(), welfare::InvalidScenario);
    bad = sc;
    bad.noise.pop_back();
    CHECK_THROWS_AS(bad.validate(), welfare::InvalidScenario);
    bad = sc;
    bad.groups[0].prob = 0.0;
    CHECK_THROWS_AS(bad.validate(), welfare::InvalidScenario);
    bad = sc;
    bad.groups[1].util_after = {1.0};
    CHECK_THROWS_AS(bad.validate(), welfare::InvalidScenario);
}

TEST_CASE("indirect utility takes the realized maximum") {
    PumScenario sc = two_group_gumbel();
    std::vector<double> eps = {0.3, -0.2};
    CHECK(welfare::indirect_utility(sc, 0, PolicyState::Before, eps) == 0.3);
    CHECK(welfare::indirect_utility(sc, 0, PolicyState::After, eps) == 0.8);
    CHECK_THROWS_AS(welfare::indirect_utility(sc, 5, PolicyState::After, eps),
                    welfare::InvalidCovariate);
    CHECK_THROWS_AS(welfare::indirect_utility(sc, 0, PolicyState::After, {0.1}),
                    welfare::LengthMismatch);
}

TEST_CASE("draws are reproducible and thread-count invariant") {
    PumScenario sc = two_group_gumbel();
    auto a = welfare::draw_tau(sc, 4000, 42, 1);
    auto b = welfare::draw_tau(sc, 4000, 42, 1);
    auto c = welfare::draw_tau(sc, 4000, 42, 3);
    auto d = welfare::draw_tau(sc, 4000, 43, 1);
    CHECK(a.per_group == b.per_group);
    CHECK(a.per_group == c.per_group);
    CHECK(a.per_group != d.per_group);
}

TEST_CASE("gumbel welfare levels match the closed form") {
    // With unit gumbel tastes, the mean indirect utility is the log-sum of
    // exponentiated utilities plus the Euler constant: for (0, 1) that is
    // log(1 + e) + 0.5772... = 1.8905 to four decimals.
    double closed = oracles::gumbel_max_mean({0.0, 1.0});
    CHECK(closed == Catch::Approx(1.8905).margin(5e-5));

    PumScenario sc = two_group_gumbel();
    const std::size_t n = 60000;
    welfare::SubstreamRng seq(123);
    std::vector<double> eps(2);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        eps[0] = sc.noise[0].sample(seq);
        eps[1] = sc.noise[1].sample(seq);
        acc += welfare::indirect_utility(sc, 0, PolicyState::After, eps);
    }
    double se = 1.3 / std::sqrt(static_cast<double>(n));
    CHECK(acc / n == Catch::Approx(closed).margin(4.0 * se));
}

TEST_CASE("group mean effect matches the closed form") {
    // Group 0: before (0,0), after (0,1).  E[tau] = log(1+e) - log 2.
    PumScenario sc = two_group_gumbel();
    auto td = welfare::draw_tau(sc, 60000, 7, 1);
    double want = std::log(1.0 + std::exp(1.0)) - std::log(2.0);
    double se = 1.5 / std::sqrt(60000.0);
    CHECK(td.group_means[0] == Catch::Approx(want).margin(4.0 * se));
}

TEST_CASE("individual tail never exceeds the group-mean tail") {
    PumScenario sc = two_group_gumbel();
    auto report = welfare::check_theorem1(sc, 20000, {0.05, 0.1, 0.25, 0.5, 1.0}, 42, 1);
    REQUIRE(report.records.size() == 5);
    for (const auto& r : report.records) {
        INFO(r.check << " at level " << r.level);
        CHECK_FALSE(r.violated);
        CHECK(r.check == "individual_le_group_mean_tail");
    }
}

TEST_CASE("lower sandwich holds once the premise is verified") {
    PumScenario sc = bounded_noise_scenario();
    // tau ranges within +-(max utility spread + noise width); 3.0 is safe.
    auto report = welfare::check_theorem2(sc, 3.0, 20000, {0.1, 0.25, 0.5}, 42, 1);
    for (const auto& r : report.records) {
        INFO(r.check << " at level " << r.level);
        CHECK_FALSE(r.violated);
    }
    CHECK_THROWS_AS(welfare::check_theorem2(sc, -0.5, 100, {0.5}, 42, 1),
                    welfare::InvalidSlackBound);
    // The premise is checked on every draw: a tiny gamma must be rejected.
    CHECK_THROWS_AS(welfare::check_theorem2(sc, 1e-6, 5000, {0.5}, 42, 1),
                    welfare::InvalidSlackBound);
}

TEST_CASE("tail welfare properties hold on coupled draws") {
    PumScenario sc = bounded_noise_scenario();
    auto report = welfare::check_appendix_properties(sc, 0, 2, PolicyState::After,
                                                     {0.1, 0.25, 0.5, 0.9}, 20000, 42, 1);
    CHECK(report.records.size() > 4);
    for (const auto& r : report.records) {
        INFO(r.check << " at level " << r.level);
        CHECK_FALSE(r.violated);
    }
    CHECK_THROWS_AS(welfare::check_appendix_properties(sc, 0, 9, PolicyState::After, {0.5},
                                                       100, 42, 1),
                    welfare::InvalidCovariate);
}

TEST_CASE("tail welfare is monotone in the level") {
    PumScenario sc = two_group_gumbel();
    double prev = -1e300;
    for (double beta : {0.05, 0.1, 0.3, 0.6, 1.0}) {
        double w = welfare::w_beta(sc, 0, PolicyState::After, welfare::BetaLevel{beta}, 20000,
                                   42);
        CHECK(w >= prev - 1e-12);
        prev = w;
    }
}
