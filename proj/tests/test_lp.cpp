#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "welfare/rng.hpp"
#include "welfare/simplex.hpp"
#include "welfare/superquantile.hpp"
#include "welfare/variational_lp.hpp"
#include "welfare/weighted_sample.hpp"

using welfare::BetaLevel;
using welfare::LpSolution;
using welfare::PluginProgram;
using welfare::SimplexProblem;
using welfare::WeightedSample;

TEST_CASE("simplex solves small reference programs") {
    SECTION("two-variable program with slack start") {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6 -> x = 4, y = 0, obj 12.
        SimplexProblem p;
        p.a = {{1.0, 1.0, 1.0, 0.0}, {1.0, 3.0, 0.0, 1.0}};
        p.b = {4.0, 6.0};
        p.c = {3.0, 2.0, 0.0, 0.0};
        p.basis = {2, 3};
        auto r = welfare::solve_simplex(p);
        CHECK(r.objective == Catch::Approx(12.0).margin(1e-9));
        CHECK(r.x[0] == Catch::Approx(4.0).margin(1e-9));
        CHECK(r.x[1] == Catch::Approx(0.0).margin(1e-9));
    }

    SECTION("degenerate program terminates") {
        // Degenerate vertex at the origin; Bland's rule must still finish.
        SimplexProblem p;
        p.a = {{1.0, -1.0, 1.0, 0.0}, {1.0, 1.0, 0.0, 1.0}};
        p.b = {0.0, 2.0};
        p.c = {1.0, 1.0, 0.0, 0.0};
        p.basis = {2, 3};
        auto r = welfare::solve_simplex(p);
        CHECK(r.objective == Catch::Approx(2.0).margin(1e-9));
    }

    SECTION("unbounded program throws") {
        SimplexProblem p;
        p.a = {{1.0, -1.0, 1.0}};
        p.b = {1.0};
        p.c = {0.0, 1.0, 0.0};
        p.basis = {2};
        CHECK_THROWS_AS(welfare::solve_simplex(p), welfare::LpNumericalFailure);
    }

    SECTION("negative rhs is rejected") {
        SimplexProblem p;
        p.a = {{1.0, 1.0}};
        p.b = {-1.0};
        p.c = {1.0, 0.0};
        p.basis = {1};
        CHECK_THROWS_AS(welfare::solve_simplex(p), welfare::LpNumericalFailure);
    }
}

TEST_CASE("plug-in program validation") {
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{}, 0.5, {}}),
                    welfare::EmptySample);
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{1.0}, 0.0, {}}),
                    welfare::InvalidLevel);
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{1.0}, 1.1, {}}),
                    welfare::InvalidLevel);
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{1.0, std::nan("")}, 0.5, {}}),
                    welfare::NonFiniteValue);
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{1.0, 2.0}, 0.5, {1.0}}),
                    welfare::LengthMismatch);
    CHECK_THROWS_AS(welfare::solve_breakpoints(PluginProgram{{1.0, 2.0}, 0.5, {1.0, -1.0}}),
                    welfare::NonPositiveWeight);
}

TEST_CASE("breakpoint objectives on the evenly spread sample") {
    PluginProgram prog{{10.0, 20.0, 30.0, 40.0, 50.0}, 0.5, {}};
    // Objective at each breakpoint: 10, 16, 18, 16, 10; maximum at 30.
    std::vector<double> v = prog.tau_hat;
    std::vector<double> w(5, 0.2);
    std::vector<double> expect = {10.0, 16.0, 18.0, 16.0, 10.0};
    for (std::size_t k = 0; k < v.size(); ++k) {
        CHECK(oracles::variational_objective(v, w, 0.5, v[k]) ==
              Catch::Approx(expect[k]).margin(1e-12));
    }
    auto sol = welfare::solve_breakpoints(prog);
    CHECK(sol.objective == Catch::Approx(18.0).margin(1e-12));
    CHECK(sol.lambda_hat == 30.0);
    auto is = welfare::interpret_solution(sol, prog);
    CHECK(is.superquantile_estimate == Catch::Approx(18.0).margin(1e-12));
    CHECK(is.beta_quantile_estimate == 30.0);
    CHECK(is.n_binding == 2); // 10 and 20 sit strictly below the quantile
}

TEST_CASE("solution picks the smallest maximizing breakpoint") {
    // With beta = 0.5 both -5 and 5 maximize; the quantile convention is the
    // left endpoint.
    PluginProgram prog{{-5.0, 5.0}, 0.5, {}};
    auto sol = welfare::solve_breakpoints(prog);
    CHECK(sol.lambda_hat == -5.0);
    CHECK(sol.objective == Catch::Approx(-5.0).margin(1e-12));
}

TEST_CASE("z variables recover the truncated deviations") {
    PluginProgram prog{{1.0, 2.0, 4.0}, 2.0 / 3.0, {}};
    auto sol = welfare::solve_breakpoints(prog);
    REQUIRE(sol.z.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(sol.z[k] ==
              Catch::Approx(std::min(prog.tau_hat[k] - sol.lambda_hat, 0.0)).margin(1e-12));
    }
}

TEST_CASE("breakpoint solution equals the sorted closed form") {
    welfare::SubstreamRng rng(404);
    for (int rep = 0; rep < 30; ++rep) {
        std::size_t k = 2 + static_cast<std::size_t>(rng.uniform01() * 60);
        std::vector<double> tau, wts;
        for (std::size_t i = 0; i < k; ++i) {
            tau.push_back(rng.normal(0.0, 5.0));
            wts.push_back(0.1 + rng.uniform01());
        }
        bool weighted = rep % 2 == 0;
        double beta = 0.05 + 0.95 * rng.uniform01();
        PluginProgram prog{tau, beta, weighted ? wts : std::vector<double>{}};
        auto sol = welfare::solve_breakpoints(prog);
        auto sample = weighted ? WeightedSample::from_weighted(tau, wts)
                               : WeightedSample::from_values(tau);
        auto direct = welfare::lower_superquantile(sample, BetaLevel{beta});
        CHECK(sol.objective ==
              Catch::Approx(direct.value).margin(1e-10 * (1.0 + std::abs(direct.value))));
        // The estimated quantile satisfies the generalized-inverse property.
        CHECK(sample.cdf(sol.lambda_hat) >= beta - 1e-9);
    }
}

TEST_CASE("simplex route agrees with the breakpoint route") {
    welfare::SubstreamRng rng(505);
    for (int rep = 0; rep < 12; ++rep) {
        std::size_t k = 2 + static_cast<std::size_t>(rng.uniform01() * 40);
        std::vector<double> tau, wts;
        for (std::size_t i = 0; i < k; ++i) {
            tau.push_back(rng.normal(-1.0, 4.0)); // mixes negative and positive effects
            wts.push_back(0.1 + rng.uniform01());
        }
        double beta = 0.05 + 0.95 * rng.uniform01();
        PluginProgram prog{tau, beta, rep % 2 ? wts : std::vector<double>{}};
        auto bp = welfare::solve_breakpoints(prog);
        auto sx = welfare::solve_simplex_lp(prog);
        CHECK(sx.objective == Catch::Approx(bp.objective).margin(1e-8 * (1.0 + std::abs(bp.objective))));
        auto sample = prog.weights.empty() ? WeightedSample::from_values(tau)
                                           : WeightedSample::from_weighted(tau, wts);
        CHECK(sample.cdf(sx.lambda_hat) >= beta - 1e-9);
    }
}

TEST_CASE("beta of one returns the mean with every constraint binding freely") {
    PluginProgram prog{{3.0, -1.0, 2.0}, 1.0, {}};
    auto sol = welfare::solve_breakpoints(prog);
    CHECK(sol.objective == Catch::Approx(4.0 / 3.0).margin(1e-12));
    CHECK(sol.lambda_hat == 3.0); // largest value is the 1-quantile
}
