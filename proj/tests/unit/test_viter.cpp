#include <doctest.h>

#include <cmath>

#include "rso/viter.hpp"
#include "test_helpers.hpp"

using namespace rso;

TEST_CASE("bellman iteration obeys the contraction bound") {
    const TabularMdp mdp = random_mdp(21, 6, 3, 0.9);
    const QTable star = exact_q_star(mdp, 1e-12);
    QTable q0(6, 3);
    double q0_err = 0.0;
    for (int x = 0; x < 6; ++x)
        for (int a = 0; a < 3; ++a) q0_err = std::max(q0_err, std::abs(star(x, a)));

    const int k_max = 60;
    auto [q, trace] = iterate_operator(mdp, OperatorKind::bellman(), q0, k_max, 0);
    double err = 0.0;
    for (int x = 0; x < 6; ++x)
        for (int a = 0; a < 3; ++a) err = std::max(err, std::abs(q(x, a) - star(x, a)));
    CHECK(err <= std::pow(mdp.gamma(), k_max) * q0_err + 1e-12);
    CHECK(trace.steps.size() == k_max + 1);
}

TEST_CASE("rso iteration on M2 converges to V* for any seed") {
    const TabularMdp m2 = test::make_m2();
    for (std::uint64_t seed : {0ull, 1ull, 42ull, 12345ull}) {
        auto [q, trace] = iterate_operator(m2, OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)),
                                           QTable(2, 2), 500, seed);
        CHECK(std::abs(greedy_value(q, 0).value - 2.0) < 1e-3);
    }
}

TEST_CASE("iterate_operator is deterministic given the seed") {
    const TabularMdp mdp = random_mdp(4, 5, 3, 0.8);
    const OperatorKind kind = OperatorKind::rso(BetaSpec::uniform(0.0, 2.0));
    auto [qa, ta] = iterate_operator(mdp, kind, QTable(5, 3), 100, 77);
    auto [qb, tb] = iterate_operator(mdp, kind, QTable(5, 3), 100, 77);
    CHECK(qa.values() == qb.values());
    REQUIRE(ta.steps.size() == tb.steps.size());
    for (std::size_t i = 0; i < ta.steps.size(); ++i) {
        CHECK(ta.steps[i].v == tb.steps[i].v); // bit-identical
        CHECK(ta.steps[i].beta == tb.steps[i].beta);
    }
}

TEST_CASE("iterate_operator validates its arguments") {
    const TabularMdp m2 = test::make_m2();
    CHECK_THROWS_AS(iterate_operator(m2, OperatorKind::bellman(), QTable(3, 2), 10, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(iterate_operator(m2, OperatorKind::bellman(), QTable(2, 2), 0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(iterate_operator(m2, OperatorKind::bellman(), QTable(2, 2), 10, 0, 0),
                    std::invalid_argument);
}

TEST_CASE("convergence_report") {
    const TabularMdp m2 = test::make_m2();
    const QTable star = exact_q_star(m2, 1e-12);

    SUBCASE("bellman run recovers the exact gaps") {
        auto [q, trace] = iterate_operator(m2, OperatorKind::bellman(), QTable(2, 2), 200, 0, 1);
        const ConvergenceReport rep = convergence_report(trace, star);
        CHECK(rep.max_v_error < 1e-6);
        for (std::size_t i = 0; i < rep.true_gap.size(); ++i)
            CHECK(rep.tail_min_gap[i] == doctest::Approx(rep.true_gap[i]).epsilon(1e-6));
    }
    SUBCASE("rso run never understates the true gap and lifts the suboptimal pair") {
        auto [q, trace] = iterate_operator(m2, OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)),
                                           QTable(2, 2), 1000, 3, 1);
        const ConvergenceReport rep = convergence_report(trace, star);
        CHECK(rep.tail_min_gap[1] >= 2.0 - 1e-6); // pair (0, a1)
    }
    SUBCASE("length-1 trace reports its single snapshot") {
        IterationTrace trace;
        trace.n_states = 2;
        trace.n_actions = 2;
        trace.steps.push_back({0, {1.0, 0.0}, 0.0, 0.0});
        trace.snapshots.push_back({0, {0.0, 1.0, 0.0, 0.0}});
        const ConvergenceReport rep = convergence_report(trace, star);
        CHECK(rep.tail_min_gap == std::vector<double>{0.0, 1.0, 0.0, 0.0});
        CHECK(rep.v_error[0] == doctest::Approx(1.0));
    }
    SUBCASE("dimension mismatch throws") {
        IterationTrace trace;
        trace.n_states = 3;
        trace.n_actions = 2;
        trace.steps.push_back({0, {0.0, 0.0, 0.0}, 0.0, 0.0});
        CHECK_THROWS_AS(convergence_report(trace, star), std::invalid_argument);
        CHECK_THROWS_AS(convergence_report(IterationTrace{}, star), std::invalid_argument);
    }
}

TEST_CASE("geometric_tail_check") {
    const TabularMdp m2 = test::make_m2();

    SUBCASE("holds on bellman traces") {
        auto [q, trace] = iterate_operator(m2, OperatorKind::bellman(), QTable(2, 2), 100, 0);
        CHECK(geometric_tail_check(trace, m2.gamma()));
    }
    SUBCASE("holds on rso traces for several seeds") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto [q, trace] = iterate_operator(m2, OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)),
                                               QTable(2, 2), 400, seed);
            CHECK(geometric_tail_check(trace, m2.gamma()));
        }
    }
    SUBCASE("rejects a hand-built violating trace") {
        IterationTrace trace;
        trace.n_states = 1;
        trace.n_actions = 1;
        trace.steps.push_back({0, {0.0}, 0.0, 0.0});
        trace.steps.push_back({1, {0.5}, 0.5, 0.0}); // ||V1 - V0|| = 0.5
        for (int k = 2; k <= 40; ++k) trace.steps.push_back({k, {0.5}, 0.0, 0.0});
        trace.steps.push_back({41, {-0.5}, 1.0, 0.0}); // drop of 1 far beyond the bound
        CHECK_FALSE(geometric_tail_check(trace, 0.5));
    }
}

TEST_CASE("monotone auxiliary sequence V_k + f_k is non-decreasing") {
    // f_k = ||V_1 - V_0|| * sum_{l<k} gamma^l compensates the worst-case dip
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const TabularMdp mdp = random_mdp(seed + 60, 5, 3, 0.9);
        auto [q, trace] = iterate_operator(mdp, OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)),
                                           QTable(5, 3), 300, seed);
        double first_step = 0.0;
        for (int x = 0; x < 5; ++x)
            first_step =
                std::max(first_step, std::abs(trace.steps[1].v[x] - trace.steps[0].v[x]));
        double f = 0.0, geom = 1.0;
        std::vector<double> prev(5, -1e300);
        for (const IterationStep& step : trace.steps) {
            for (int x = 0; x < 5; ++x) {
                CHECK(step.v[x] + f >= prev[x] - 1e-9);
                prev[x] = step.v[x] + f;
            }
            f += first_step * geom;
            geom *= mdp.gamma();
        }
    }
}
