// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <string>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/rng.hpp"

namespace cmdplab {

/// Which per-pair payoff table an evaluation refers to.
enum class ValueKind { Reward, Constraint };

/// Exact state-value function of a policy plus its scalar value at the
/// initial distribution.
struct PolicyValue {
    Eigen::VectorXd v; ///< per-state values
    double v_rho = 0.0;
};

/// Exact policy evaluation: solve (I - gamma P_pi) V = u_pi by a dense
/// LU factorization.  `pi_table` is an S x A action-probability table;
/// `u` is any finite S x A payoff table.  Throws NumericalError if the
/// solve residual exceeds 1e-9 * (1 + max |V|).
PolicyValue exact_policy_value_table(const TabularCmdp& m,
                                     const Eigen::MatrixXd& pi_table,
                                     const Eigen::MatrixXd& u);

/// Convenience overloads taking a Policy (Stochastic, Deterministic or
/// GreedyLinear; Mixture is rejected — use mixture_value, whose
/// semantics differ from evaluating the state-wise averaged table).
PolicyValue exact_policy_value(const TabularCmdp& m, const Policy& pi,
                               const Eigen::MatrixXd& u,
                               const FeatureMap* features = nullptr);
PolicyValue exact_policy_value(const TabularCmdp& m, const Policy& pi,
                               ValueKind which,
                               const FeatureMap* features = nullptr);

/// Result of exact value iteration on payoff table u.
struct MdpOptimum {
    Eigen::VectorXd v_star; ///< within `tol` of the true optimum, sup-norm
    double v_rho = 0.0;
    PolicyPtr policy; ///< deterministic policy, greedy for the final Q
    int iterations = 0;
};

/// Value iteration to sup-norm accuracy `tol`: the loop stops when the
/// update step is below tol*(1-gamma)/(2*gamma), which the standard
/// contraction argument converts into ||V - V*||_inf <= tol.
MdpOptimum exact_mdp_optimum(const TabularCmdp& m, const Eigen::MatrixXd& u,
                             double tol);

/// Feasibility margin zeta = max_pi V_c^pi(rho) - b.
struct SlaterInfo {
    double zeta = 0.0;
    bool degenerate = false; ///< true iff zeta <= 0 (no strict interior)
};
SlaterInfo slater_constant(const TabularCmdp& m, double tol = 1e-9);

/// Upper bound on the optimal dual variable, 1/((1-gamma) zeta).
/// Throws ParameterError if zeta <= 0.
double dual_bound(const TabularCmdp& m, double zeta);

/// Exact constrained optimum via the occupancy-measure linear program:
///   maximize  sum mu r   subject to
///   sum_a mu(s,a) = rho(s) + gamma sum_{s',a'} P(s|s',a') mu(s',a')
///   sum mu c >= b,  mu >= 0.
struct OccupancySolution {
    bool feasible = false;
    Eigen::MatrixXd occupancy; ///< S x A, sums to 1/(1-gamma)
    double value_r = 0.0;
    double value_c = 0.0;
    PolicyPtr policy; ///< mu-ratio extraction; uniform rows where mu = 0
};
OccupancySolution exact_cmdp_solve(const TabularCmdp& m);

std::string occupancy_to_json_string(const OccupancySolution& sol);

/// Value of a mixture policy: the weighted mean of its components'
/// exact values (a mixture draws one component at the start and follows
/// it forever).  Components with bitwise-equal materialized tables are
/// grouped and evaluated once.
double mixture_value(const TabularCmdp& m, const Policy& mix,
                     const Eigen::MatrixXd& u,
                     const FeatureMap* features = nullptr);
double mixture_value(const TabularCmdp& m, const Policy& mix, ValueKind which,
                     const FeatureMap* features = nullptr);

/// Monte-Carlo estimate of a policy's value at rho from truncated
/// rollouts, used to cross-check the exact oracle.
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long num_rollouts = 0;
    int horizon = 0;
    double truncation_bias_bound = 0.0;
};
McEstimate mc_policy_value(const TabularCmdp& m, const Policy& pi,
                           const Eigen::MatrixXd& u, long num_rollouts,
                           RngStream& stream,
                           const FeatureMap* features = nullptr);

} // namespace cmdplab
