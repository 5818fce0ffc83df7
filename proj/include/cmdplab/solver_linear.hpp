#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cmdplab/design.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/sampling.hpp"
#include "cmdplab/solver_common.hpp"

namespace cmdplab {

struct LinearSolveResult {
    PolicyPtr policy;          ///< greedy for phi' theta_sum, lowest index
    Eigen::VectorXd theta_sum; ///< sum of the per-iteration weight vectors
    Eigen::MatrixXd q_tilde;   ///< cumulative Q estimate over all pairs
    std::vector<IterationDiag> diag;
    // Populated only with SolverOptions::keep_tables:
    std::vector<Eigen::VectorXd> theta_list;   ///< per-iteration theta^t
    std::vector<Eigen::VectorXd> q_hat_values; ///< phi theta^t, pair-major
    std::vector<Eigen::VectorXd> v_hat_values; ///< per-iteration values
};

/// Least-squares mirror-descent value iteration.  Iteration t regresses
/// the coreset targets z_i = box(s_i, a_i) + gamma * (batch t-1 mean of
/// Vhat^{t-1}) onto the features via wls_solve, accumulates
/// q_tilde += phi theta^t over all pairs, and takes
/// Vhat^t = max_a q_tilde^t - max_a q_tilde^{t-1}.  The returned policy
/// is greedy for phi' theta_sum.  The buffer must have been collected
/// on exactly the design's coreset, in order.
LinearSolveResult ls_mdvi(int T, int M, double gamma,
                          const Eigen::MatrixXd& box_reward,
                          const Buffer& buffer, const Design& design,
                          const FeatureMap& features,
                          const SolverOptions& opts = {});

/// Least-squares policy evaluation: same regression, but each
/// iteration's value is the policy backup of phi theta^t (no
/// accumulation) and the output is (1/T) sum_t Vhat^t(rho).
/// PeResult::q_targets holds phi theta^t over all pairs, pair-major.
PeResult ls_pe(int T, int M, double gamma, const Eigen::MatrixXd& diamond,
               const Buffer& buffer, const Policy& pi, const Design& design,
               const FeatureMap& features, const Eigen::VectorXd& rho,
               const SolverOptions& opts = {});

} // namespace cmdplab
