// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <Eigen/Dense>

namespace cmdplab {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;      ///< primal solution (length = columns of A)
    double objective = 0.0; ///< value of the maximized objective
};

/// Maximize c'x subject to A x = b, x >= 0.
///
/// Dense two-phase primal simplex with Bland's anti-cycling rule.
/// Intended for the small, well-scaled equality systems produced by
/// occupancy-measure formulations, not for large sparse programs.
/// Throws NumericalError if the pivot loop exceeds its iteration cap.
LpSolution simplex_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c);

} // namespace cmdplab
