#include <doctest.h>

#include <cmath>

#include "rso/operators.hpp"
#include "test_helpers.hpp"

using namespace rso;

namespace {

QTable random_table(int n_states, int n_actions, std::uint64_t seed, double scale = 10.0) {
    QTable q(n_states, n_actions);
    Rng rng(seed);
    for (int x = 0; x < n_states; ++x)
        for (int a = 0; a < n_actions; ++a) q(x, a) = rng.uniform(-scale, scale);
    return q;
}

} // namespace

TEST_CASE("bellman_backup") {
    const TabularMdp m2 = test::make_m2();
    const QTable star = exact_q_star(m2, 1e-12);

    SUBCASE("fixed point reproduces itself") {
        CHECK(bellman_backup(m2, star, 0, 0) == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("zero table gives the immediate reward") {
        QTable zero(2, 2);
        CHECK(bellman_backup(m2, zero, 0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("gamma = 0 returns R(x,a)") {
        const TabularMdp mdp = random_mdp(17, 4, 3, 0.0);
        const QTable q = random_table(4, 3, 5);
        for (int x = 0; x < 4; ++x)
            for (int a = 0; a < 3; ++a)
                CHECK(bellman_backup(mdp, q, x, a) == doctest::Approx(mdp.r(x, a)));
    }
    SUBCASE("index errors") {
        QTable q(2, 2);
        CHECK_THROWS_AS(bellman_backup(m2, q, 2, 0), std::out_of_range);
        CHECK_THROWS_AS(bellman_backup(m2, q, 0, 2), std::out_of_range);
    }
}

TEST_CASE("consistent_backup") {
    const TabularMdp m2 = test::make_m2();
    const QTable star = exact_q_star(m2, 1e-12);

    SUBCASE("self-loop keeps Q(x,a): 1 + 0.5 * Q*(0,0) = 2") {
        CHECK(consistent_backup(m2, star, 0, 0) == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("equals bellman when no self-transitions exist") {
        // two-state swap MDP: every action moves to the other state
        std::vector<double> p = {0, 1, 0, 1, 1, 0, 1, 0};
        std::vector<double> r = {0.3, 0.7, 0.1, 0.9};
        const TabularMdp swap(2, 2, std::move(p), std::move(r), 0.8);
        const QTable q = random_table(2, 2, 3);
        for (int x = 0; x < 2; ++x)
            for (int a = 0; a < 2; ++a)
                CHECK(consistent_backup(swap, q, x, a) ==
                      doctest::Approx(bellman_backup(swap, q, x, a)));
    }
    SUBCASE("never exceeds the bellman backup") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const TabularMdp mdp = random_mdp(seed, 6, 3, 0.9);
            const QTable q = random_table(6, 3, seed + 100);
            for (int x = 0; x < 6; ++x)
                for (int a = 0; a < 3; ++a)
                    CHECK(consistent_backup(mdp, q, x, a) <=
                          bellman_backup(mdp, q, x, a) + 1e-12);
        }
    }
}

TEST_CASE("rso_backup") {
    const TabularMdp m2 = test::make_m2();
    const QTable star = exact_q_star(m2, 1e-12);

    SUBCASE("beta = 0 reduces to bellman") {
        const QTable q = random_table(2, 2, 8);
        for (int x = 0; x < 2; ++x)
            for (int a = 0; a < 2; ++a)
                CHECK(rso_backup(m2, q, x, a, 0.0) == bellman_backup(m2, q, x, a));
    }
    SUBCASE("greedy action sees no penalty") {
        const QTable q = random_table(2, 2, 9);
        for (int x = 0; x < 2; ++x) {
            const int a = greedy_value(q, x).action;
            CHECK(rso_backup(m2, q, x, a, 1.7) == doctest::Approx(bellman_backup(m2, q, x, a)));
        }
    }
    SUBCASE("penalized value at the fixed point: 0 - 1.5 * (2 - 0) = -3") {
        CHECK(rso_backup(m2, star, 0, 1, 1.5) == doctest::Approx(-3.0).epsilon(1e-10));
    }
    SUBCASE("negative beta is a usage error") {
        CHECK_THROWS_AS(rso_backup(m2, star, 0, 1, -0.5), std::invalid_argument);
    }
}

TEST_CASE("rso dominance and monotonicity in beta") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TabularMdp mdp = random_mdp(seed, 5, 4, 0.85);
        const QTable q = random_table(5, 4, seed + 50);
        for (int x = 0; x < 5; ++x)
            for (int a = 0; a < 4; ++a) {
                const double tb = bellman_backup(mdp, q, x, a);
                double prev = tb;
                for (double beta : {0.0, 0.3, 0.9, 1.4, 2.0}) {
                    const double v = rso_backup(mdp, q, x, a, beta);
                    CHECK(v <= tb + 1e-12);   // dominance
                    CHECK(v <= prev + 1e-12); // non-increasing in beta
                    prev = v;
                }
            }
    }
}

TEST_CASE("consistent operator is the rso member with beta = gamma * P(x|x,a)") {
    // identity checked pointwise on random tables; the acceptance suite
    // repeats this on 10^4 tuples
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const TabularMdp mdp = random_mdp(seed, 7, 3, 0.9);
        const QTable q = random_table(7, 3, seed + 1000);
        for (int x = 0; x < 7; ++x)
            for (int a = 0; a < 3; ++a) {
                const double beta = mdp.gamma() * mdp.p(x, a, x);
                CHECK(consistent_backup(mdp, q, x, a) ==
                      doctest::Approx(rso_backup(mdp, q, x, a, beta)).epsilon(1e-12));
            }
    }
}

TEST_CASE("family_bounds_check brackets the operator family") {
    const TabularMdp m2 = test::make_m2();
    const QTable star = exact_q_star(m2, 1e-12);
    const double tb = bellman_backup(m2, star, 0, 1);
    CHECK(family_bounds_check(m2, star, 0, 1, tb, 0.7));                          // upper boundary
    CHECK(family_bounds_check(m2, star, 0, 1, rso_backup(m2, star, 0, 1, 0.7), 0.7)); // lower
    CHECK_FALSE(family_bounds_check(m2, star, 0, 1, tb + 1.0, 0.7));              // above T_B
    CHECK_FALSE(family_bounds_check(m2, star, 0, 1, rso_backup(m2, star, 0, 1, 2.0), 0.7));
}

TEST_CASE("sampled_target matches the single-sample forms") {
    QTable q(3, 2);
    q(0, 0) = 1.0;
    q(0, 1) = 3.0;
    q(1, 0) = -2.0;
    q(1, 1) = 0.5;
    const double gamma = 0.9;

    SUBCASE("consistent equals bellman when x_next differs from x") {
        const double b = sampled_target(OperatorKind::bellman(), q, 0, 0, 1.0, 1, gamma, 0.0);
        const double c = sampled_target(OperatorKind::consistent(), q, 0, 0, 1.0, 1, gamma, 0.0);
        CHECK(b == c);
        CHECK(b == doctest::Approx(1.0 + gamma * 0.5));
    }
    SUBCASE("consistent bootstraps Q(x,a) on a self transition") {
        const double c = sampled_target(OperatorKind::consistent(), q, 0, 0, 1.0, 0, gamma, 0.0);
        CHECK(c == doctest::Approx(1.0 + gamma * 1.0));
    }
    SUBCASE("rso with beta = 0 equals bellman") {
        const OperatorKind rso_op = OperatorKind::rso(BetaSpec::uniform(0.0, 2.0));
        const double b = sampled_target(OperatorKind::bellman(), q, 0, 0, 1.0, 1, gamma, 0.0);
        CHECK(sampled_target(rso_op, q, 0, 0, 1.0, 1, gamma, 0.0) == b);
    }
    SUBCASE("zero table and reward 1 give target 1 for all operators") {
        QTable zero(3, 2);
        for (const OperatorKind& kind : {OperatorKind::bellman(), OperatorKind::consistent(),
                                         OperatorKind::rso(BetaSpec::constant(1.0))})
            CHECK(sampled_target(kind, zero, 0, 0, 1.0, 1, gamma, 1.0) == doctest::Approx(1.0));
    }
    SUBCASE("rso subtracts beta times the gap of the current pair") {
        const OperatorKind rso_op = OperatorKind::rso(BetaSpec::uniform(0.0, 2.0));
        const double t = sampled_target(rso_op, q, 0, 0, 1.0, 1, gamma, 1.5);
        CHECK(t == doctest::Approx(1.0 + gamma * 0.5 - 1.5 * (3.0 - 1.0)));
    }
    SUBCASE("terminal transition zeroes the continuation") {
        const double t =
            sampled_target(OperatorKind::bellman(), q, 0, 0, -1.0, 1, gamma, 0.0, true);
        CHECK(t == doctest::Approx(-1.0));
        // consistent treats a terminal self transition as terminal too
        const double c =
            sampled_target(OperatorKind::consistent(), q, 0, 0, -1.0, 0, gamma, 0.0, true);
        CHECK(c == doctest::Approx(-1.0));
    }
}

TEST_CASE("sampled_target identity: consistent equals rso with beta = gamma * 1{self}") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        QTable q(4, 3);
        for (int x = 0; x < 4; ++x)
            for (int a = 0; a < 3; ++a) q(x, a) = rng.uniform(-5.0, 5.0);
        const int x = rng.uniform_int(4), a = rng.uniform_int(3), xn = rng.uniform_int(4);
        const double reward = rng.uniform(-1.0, 1.0);
        const double gamma = 0.95;
        const double c = sampled_target(OperatorKind::consistent(), q, x, a, reward, xn, gamma, 0.0);
        const double beta = xn == x ? gamma : 0.0;
        const OperatorKind rso_op = OperatorKind::rso(BetaSpec::constant(1.0));
        const double r = sampled_target(rso_op, q, x, a, reward, xn, gamma, beta);
        CHECK(c == doctest::Approx(r).epsilon(1e-12));
    }
}

TEST_CASE("operator kind text form") {
    CHECK(OperatorKind::parse("bellman") == OperatorKind::bellman());
    CHECK(OperatorKind::parse("consistent") == OperatorKind::consistent());
    const OperatorKind r = OperatorKind::parse("rso:uniform:0:2");
    CHECK(r.is_rso());
    CHECK(OperatorKind::parse(r.to_string()) == r);
    CHECK_THROWS_AS(OperatorKind::parse("softmax"), std::invalid_argument);
}
