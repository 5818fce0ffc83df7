// Unit tests for the exact ground-truth oracles: policy evaluation,
// value iteration, the Slater constant, the occupancy LP, mixtures,
// and the Monte-Carlo cross-check.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/generators.hpp"
#include "cmdplab/oracle.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/rng.hpp"

using namespace cmdplab;

namespace {

TabularCmdp single_state(double gamma, double r0, double c0, double b) {
    TabularCmdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.gamma = gamma;
    m.b = b;
    m.rho = Eigen::VectorXd::Ones(1);
    m.r = Eigen::MatrixXd::Constant(1, 1, r0);
    m.c = Eigen::MatrixXd::Constant(1, 1, c0);
    m.P = Eigen::MatrixXd::Ones(1, 1);
    require_valid(m);
    return m;
}

/// 1 state, 2 actions, both self-loops; r = (r0, r1), c = (c0, c1).
TabularCmdp one_state_two_actions(double gamma, double r0, double r1,
                                  double c0, double c1, double b) {
    TabularCmdp m;
    m.num_states = 1;
    m.num_actions = 2;
    m.gamma = gamma;
    m.b = b;
    m.rho = Eigen::VectorXd::Ones(1);
    m.r.resize(1, 2);
    m.r << r0, r1;
    m.c.resize(1, 2);
    m.c << c0, c1;
    m.P = Eigen::MatrixXd::Ones(2, 1);
    require_valid(m);
    return m;
}

/// The worked constrained example: r=(1,0), c=(0,1), gamma=0.5, b=1.
TabularCmdp lp_example() {
    return one_state_two_actions(0.5, 1.0, 0.0, 0.0, 1.0, 1.0);
}

} // namespace

TEST_CASE("exact_policy_value: geometric series on the identity chain") {
    const TabularCmdp m = single_state(0.9, 1.0, 1.0, 0.0);
    const PolicyPtr pi = Policy::deterministic(std::vector<int>{0});
    const PolicyValue v = exact_policy_value(m, *pi, ValueKind::Reward);
    CHECK(v.v(0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(v.v_rho == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("exact_policy_value: zero payoff gives the zero function") {
    const TabularCmdp m = random_tabular_cmdp(17, 6, 3, 0.9, 0.05);
    const PolicyPtr pi = Policy::deterministic(std::vector<int>{0, 1, 2,
                                                                0, 1, 2});
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 3);
    const PolicyValue v = exact_policy_value(m, *pi, zero);
    CHECK(v.v.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(v.v_rho == 0.0);
}

TEST_CASE("exact_policy_value: two-state deterministic cycle") {
    // s0 -> s1 -> s0, r = (1, 0), gamma = 0.5.  V(s0) = 1/(1-gamma^2).
    TabularCmdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.gamma = 0.5;
    m.b = 0.0;
    m.rho = Eigen::VectorXd::Zero(2);
    m.rho(0) = 1.0;
    m.r.resize(2, 1);
    m.r << 1.0, 0.0;
    m.c = Eigen::MatrixXd::Zero(2, 1);
    m.P = Eigen::MatrixXd::Zero(2, 2);
    m.P(0, 1) = 1.0;
    m.P(1, 0) = 1.0;
    require_valid(m);

    // Independent check by a truncated power series: 60 terms of
    // gamma^t r(s_t) starting at s0 (r only at even steps).
    double series = 0.0;
    for (int t = 0; t < 60; t += 2) series += std::pow(0.5, t);
    const PolicyPtr pi = Policy::deterministic(std::vector<int>{0, 0});
    const PolicyValue v = exact_policy_value(m, *pi, ValueKind::Reward);
    CHECK(v.v(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(v.v(0) == doctest::Approx(series).epsilon(1e-12));
    CHECK(v.v_rho == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("exact_policy_value rejects mixtures and bad tables") {
    const TabularCmdp m = single_state(0.5, 1.0, 1.0, 0.0);
    const PolicyPtr a = Policy::deterministic(std::vector<int>{0});
    const PolicyPtr mix = Policy::mixture({a, a},
                                          std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(
        (void)exact_policy_value(m, *mix, ValueKind::Reward),
        ParameterError);
    const Eigen::MatrixXd bad =
        Eigen::MatrixXd::Constant(1, 1,
                                  std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS((void)exact_policy_value(m, *a, bad), ParameterError);
}

TEST_CASE("exact_mdp_optimum: constant payoff saturates at the horizon") {
    const TabularCmdp m = random_tabular_cmdp(5, 7, 2, 0.8, 0.05);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(7, 2);
    const MdpOptimum opt = exact_mdp_optimum(m, ones, 1e-10);
    for (int s = 0; s < 7; ++s)
        CHECK(opt.v_star(s) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("exact_mdp_optimum: dominant action is found") {
    const TabularCmdp m = one_state_two_actions(0.5, 0.0, 1.0, 0.0, 0.0,
                                                0.0);
    const MdpOptimum opt = exact_mdp_optimum(m, m.r, 1e-10);
    CHECK(opt.v_star(0) == doctest::Approx(2.0).epsilon(1e-10));
    const Eigen::MatrixXd table = materialize(*opt.policy, 1, 2);
    CHECK(table(0, 1) == 1.0);
}

TEST_CASE("exact_mdp_optimum matches the LP with an inactive constraint") {
    // b = 0 and c = 1 everywhere makes the constraint vacuous, so the
    // LP optimum equals unconstrained value iteration.
    TabularCmdp m = random_tabular_cmdp(7, 5, 2, 0.9, 0.0);
    m.c = Eigen::MatrixXd::Ones(5, 2);
    m.b = 0.0;
    require_valid(m);
    const MdpOptimum vi = exact_mdp_optimum(m, m.r, 1e-9);
    const OccupancySolution lp = exact_cmdp_solve(m);
    REQUIRE(lp.feasible);
    CHECK(lp.value_r == doctest::Approx(vi.v_rho).epsilon(1e-6));
}

TEST_CASE("slater_constant: constant constraint reward") {
    TabularCmdp m = random_tabular_cmdp(1, 4, 2, 0.5, 0.0);
    m.c = Eigen::MatrixXd::Ones(4, 2);
    m.b = 0.5;
    require_valid(m);
    const SlaterInfo info = slater_constant(m);
    CHECK(info.zeta == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(!info.degenerate);
}

TEST_CASE("slater_constant: zero constraint reward is degenerate") {
    TabularCmdp m = random_tabular_cmdp(2, 3, 2, 0.5, 0.0);
    m.c = Eigen::MatrixXd::Zero(3, 2);
    m.b = 0.0;
    require_valid(m);
    const SlaterInfo info = slater_constant(m);
    CHECK(info.zeta == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(info.degenerate);
}

TEST_CASE("slater_constant: dominant constraint action") {
    const TabularCmdp m = one_state_two_actions(0.5, 0.0, 0.0, 0.0, 1.0,
                                                1.0);
    const SlaterInfo info = slater_constant(m);
    CHECK(info.zeta == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("slater_constant ignores the reward table") {
    TabularCmdp m = random_tabular_cmdp(23, 5, 3, 0.85, 0.1);
    const double z1 = slater_constant(m).zeta;
    m.r = Eigen::MatrixXd::Constant(5, 3, 0.123);
    const double z2 = slater_constant(m).zeta;
    CHECK(z1 == z2);
}

TEST_CASE("dual_bound formula") {
    TabularCmdp m9 = single_state(0.9, 1.0, 1.0, 0.0);
    CHECK(dual_bound(m9, 1.0) == doctest::Approx(10.0).epsilon(1e-12));
    TabularCmdp m5 = single_state(0.5, 1.0, 1.0, 0.0);
    CHECK(dual_bound(m5, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    TabularCmdp m0 = single_state(0.0, 1.0, 1.0, 0.0);
    CHECK(dual_bound(m0, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)dual_bound(m9, 0.0), ParameterError);
}

TEST_CASE("exact_cmdp_solve: the worked constrained example") {
    // max 2 p  s.t.  2 (1 - p) >= 1  ->  p = 0.5, values (1, 1).
    // Independently verified by a grid search over p in {0, .001, .., 1}.
    const TabularCmdp m = lp_example();
    const OccupancySolution sol = exact_cmdp_solve(m);
    REQUIRE(sol.feasible);
    CHECK(sol.value_r == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.value_c == doctest::Approx(1.0).epsilon(1e-9));
    const Eigen::MatrixXd table = materialize(*sol.policy, 1, 2);
    CHECK(table(0, 0) == doctest::Approx(0.5).epsilon(1e-9));

    double grid_best = -1.0;
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        const double vc = 2.0 * (1.0 - p);
        if (vc >= 1.0) grid_best = std::max(grid_best, 2.0 * p);
    }
    CHECK(sol.value_r == doctest::Approx(grid_best).epsilon(1e-3));
}

TEST_CASE("exact_cmdp_solve: occupancy flow conservation and consistency") {
    const TabularCmdp m = random_tabular_cmdp(31, 6, 3, 0.9, 0.1);
    const OccupancySolution sol = exact_cmdp_solve(m);
    REQUIRE(sol.feasible);
    const int S = m.num_states, A = m.num_actions;
    // Flow: sum_a mu(s,a) = rho(s) + gamma sum_{s',a'} P(s|s',a') mu.
    for (int s = 0; s < S; ++s) {
        double lhs = sol.occupancy.row(s).sum();
        double rhs = m.rho(s);
        for (int sp = 0; sp < S; ++sp)
            for (int ap = 0; ap < A; ++ap)
                rhs += m.gamma * m.P(m.pair_id(sp, ap), s) *
                       sol.occupancy(sp, ap);
        CHECK(std::abs(lhs - rhs) <= 1e-8);
    }
    CHECK(sol.occupancy.minCoeff() >= -1e-12);
    CHECK(sol.occupancy.sum() == doctest::Approx(m.horizon()).epsilon(1e-8));
    CHECK(sol.value_c >= m.b - 1e-8);

    // The extracted policy reproduces the LP values and is feasible.
    const PolicyValue vr =
        exact_policy_value(m, *sol.policy, ValueKind::Reward);
    const PolicyValue vc =
        exact_policy_value(m, *sol.policy, ValueKind::Constraint);
    CHECK(vr.v_rho == doctest::Approx(sol.value_r).epsilon(1e-6));
    CHECK(vc.v_rho == doctest::Approx(sol.value_c).epsilon(1e-6));
    CHECK(vc.v_rho >= m.b - 1e-6);
}

TEST_CASE("exact_cmdp_solve: aligned objective makes the constraint tight") {
    TabularCmdp m = random_tabular_cmdp(41, 5, 2, 0.8, 0.0);
    m.c = m.r;
    const MdpOptimum vi = exact_mdp_optimum(m, m.r, 1e-10);
    m.b = vi.v_rho - 1e-9; // leave room for the VI tolerance
    require_valid(m);
    const OccupancySolution sol = exact_cmdp_solve(m);
    REQUIRE(sol.feasible);
    CHECK(sol.value_r == doctest::Approx(vi.v_rho).epsilon(1e-6));
    CHECK(sol.value_c == doctest::Approx(vi.v_rho).epsilon(1e-6));
}

TEST_CASE("exact_cmdp_solve: LP optimality dominates random feasible "
          "policies") {
    RngStream s = RngStream::from_key(2718);
    int checked = 0;
    for (int inst = 0; inst < 50; ++inst) {
        // A generous Slater slack keeps the threshold low enough that
        // plenty of random policies are feasible competitors.
        const TabularCmdp m =
            random_tabular_cmdp(1000 + inst, 4, 2, 0.85, 0.2);
        const OccupancySolution sol = exact_cmdp_solve(m);
        REQUIRE(sol.feasible);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd table(4, 2);
            for (int st = 0; st < 4; ++st) {
                const std::vector<double> row = dirichlet_uniform(2, s);
                table(st, 0) = row[0];
                table(st, 1) = row[1];
            }
            const PolicyPtr pi = Policy::stochastic(table);
            const double vc =
                exact_policy_value(m, *pi, ValueKind::Constraint).v_rho;
            if (vc < m.b) continue; // only feasible competitors count
            const double vr =
                exact_policy_value(m, *pi, ValueKind::Reward).v_rho;
            CHECK(sol.value_r >= vr - 1e-6);
            ++checked;
        }
    }
    CHECK(checked > 50); // the comparison actually exercised many policies
}

TEST_CASE("exact_cmdp_solve flags infeasible instances") {
    // c = 0 everywhere but b > 0: no policy can reach the threshold.
    TabularCmdp m = random_tabular_cmdp(3, 3, 2, 0.5, 0.0);
    m.c = Eigen::MatrixXd::Zero(3, 2);
    m.b = 0.5;
    require_valid(m);
    const OccupancySolution sol = exact_cmdp_solve(m);
    CHECK(!sol.feasible);
}

TEST_CASE("mixture_value: singleton, idempotence, arithmetic mean") {
    // gamma = 2/3 so the two deterministic arms have values 1.0 and 3.0.
    const TabularCmdp m =
        one_state_two_actions(2.0 / 3.0, 1.0 / 3.0, 1.0, 0.0, 0.0, 0.0);
    const PolicyPtr a0 = Policy::deterministic(std::vector<int>{0});
    const PolicyPtr a1 = Policy::deterministic(std::vector<int>{1});
    const double v0 = exact_policy_value(m, *a0, ValueKind::Reward).v_rho;
    const double v1 = exact_policy_value(m, *a1, ValueKind::Reward).v_rho;
    CHECK(v0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v1 == doctest::Approx(3.0).epsilon(1e-12));

    const PolicyPtr single =
        Policy::mixture({a0}, std::vector<double>{1.0});
    CHECK(mixture_value(m, *single, ValueKind::Reward) ==
          doctest::Approx(v0).epsilon(1e-12));

    const PolicyPtr twice =
        Policy::mixture({a0, a0}, std::vector<double>{0.5, 0.5});
    CHECK(mixture_value(m, *twice, ValueKind::Reward) ==
          doctest::Approx(v0).epsilon(1e-12));

    const PolicyPtr both =
        Policy::mixture({a0, a1}, std::vector<double>{0.5, 0.5});
    CHECK(mixture_value(m, *both, ValueKind::Reward) ==
          doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mc_policy_value agrees with the exact oracle within 3 sigma") {
    const TabularCmdp m = random_tabular_cmdp(59, 5, 2, 0.85, 0.05);
    const PolicyPtr pi = Policy::stochastic(
        Eigen::MatrixXd::Constant(5, 2, 0.5));
    const double exact =
        exact_policy_value(m, *pi, ValueKind::Reward).v_rho;
    RngStream stream = RngStream::from_key(4242);
    const McEstimate est = mc_policy_value(m, *pi, m.r, 20000, stream);
    const double slack =
        3.0 * est.std_error + est.truncation_bias_bound;
    CHECK(std::abs(est.mean - exact) <= slack);
    CHECK(est.num_rollouts == 20000);
    CHECK(est.std_error > 0.0);
}
