// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include "cmdplab/policy.hpp"
#include "cmdplab/solver_common.hpp"

namespace cmdplab {

struct TabularSolveResult {
    PolicyPtr policy;        ///< deterministic, greedy for the final Q-sum
    Eigen::MatrixXd q_tilde; ///< final cumulative Q table (S x A)
    std::vector<IterationDiag> diag;
    // Populated only with SolverOptions::keep_tables:
    std::vector<Eigen::MatrixXd> q_hat_tables; ///< per-iteration targets
    std::vector<Eigen::VectorXd> v_hat_values; ///< per-iteration values
};

/// Tabular mirror-descent value iteration on sampled batch means.
/// Iteration t (1-based) forms Qhat^t(s,a) = box(s,a) + gamma * (mean
/// of Vhat^{t-1} over batch t-1), accumulates Qtilde^t = sum of Qhat,
/// and sets Vhat^t = max_a Qtilde^t - max_a Qtilde^{t-1}; the returned
/// policy is greedy for Qtilde^T with lowest-index tie-breaks.
/// Requires a buffer whose coreset is all of S x A in row-major order,
/// with at least T batches of exactly M samples.
TabularSolveResult tabular_mdvi(int T, int M, double gamma,
                                const Eigen::MatrixXd& box_reward,
                                const Buffer& buffer,
                                const SolverOptions& opts = {});

/// Exact-model variant: batch means are replaced by true expectations
/// under the model's transition rows.  Test scaffolding for the
/// deterministic convergence bound; never used on the sampled path.
TabularSolveResult tabular_mdvi_exact(int T, const TabularCmdp& m,
                                      const Eigen::MatrixXd& box_reward,
                                      const SolverOptions& opts = {});

/// Tabular policy evaluation: the same recursion with the max replaced
/// by the policy backup, returning (1/T) sum_t Vhat^t(rho).
PeResult tabular_pe(int T, int M, double gamma,
                    const Eigen::MatrixXd& diamond, const Buffer& buffer,
                    const Policy& pi, const Eigen::VectorXd& rho,
                    const FeatureMap* features = nullptr,
                    const SolverOptions& opts = {});

} // namespace cmdplab
