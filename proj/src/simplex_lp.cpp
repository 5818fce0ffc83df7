// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/simplex_lp.hpp"

#include <vector>

#include "cmdplab/cmdp.hpp"

namespace cmdplab {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
    Eigen::MatrixXd T;       // m x n_total constraint rows
    Eigen::VectorXd rhs;     // m, kept >= 0
    std::vector<int> basis;  // basis[i] = variable basic in row i

    int rows() const { return static_cast<int>(T.rows()); }
    int cols() const { return static_cast<int>(T.cols()); }

    void pivot(int r, int j) {
        const double p = T(r, j);
        T.row(r) /= p;
        rhs(r) /= p;
        for (int i = 0; i < rows(); ++i) {
            if (i == r) continue;
            const double f = T(i, j);
            if (f == 0.0) continue;
            T.row(i) -= f * T.row(r);
            rhs(i) -= f * rhs(r);
        }
        basis[static_cast<std::size_t>(r)] = j;
    }
};

/// Reduced-cost row for minimizing cost'x from the current basis:
/// obj[j] = cost_B' T_j - cost_j; positive entries can still improve.
Eigen::VectorXd reduced_costs(const Tableau& tab,
                              const Eigen::VectorXd& cost) {
    Eigen::VectorXd obj = -cost;
    for (int i = 0; i < tab.rows(); ++i) {
        const double cb = cost(tab.basis[static_cast<std::size_t>(i)]);
        if (cb != 0.0) obj += cb * tab.T.row(i).transpose();
    }
    return obj;
}

enum class PivotOutcome { Optimal, Unbounded };

/// Run the primal simplex loop minimizing cost'x.  `allowed_cols`
/// bounds the entering-variable search (used to ban artificials in
/// phase 2).  Bland's rule: lowest-index entering column with positive
/// reduced cost; leaving row is the min-ratio row, ties broken by the
/// lowest basic-variable index.
PivotOutcome run_simplex(Tableau& tab, const Eigen::VectorXd& cost,
                         int allowed_cols) {
    Eigen::VectorXd obj = reduced_costs(tab, cost);
    const long max_iters =
        4000L * (tab.rows() + tab.cols() + 1);
    for (long iter = 0; iter < max_iters; ++iter) {
        int enter = -1;
        for (int j = 0; j < allowed_cols; ++j) {
            if (obj(j) > kCostTol) { enter = j; break; }
        }
        if (enter < 0) return PivotOutcome::Optimal;

        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < tab.rows(); ++i) {
            const double a = tab.T(i, enter);
            if (a <= kPivotTol) continue;
            const double ratio = tab.rhs(i) / a;
            if (leave < 0 || ratio < best_ratio - kPivotTol ||
                (ratio < best_ratio + kPivotTol &&
                 tab.basis[static_cast<std::size_t>(i)] <
                     tab.basis[static_cast<std::size_t>(leave)])) {
                leave = i;
                best_ratio = ratio;
            }
        }
        if (leave < 0) return PivotOutcome::Unbounded;

        tab.pivot(leave, enter);
        obj = reduced_costs(tab, cost);
    }
    throw NumericalError("simplex failed to terminate within its "
                         "iteration cap");
}

} // namespace

LpSolution simplex_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (b.size() != m || c.size() != n)
        throw ParameterError("simplex_solve: inconsistent problem sizes");

    // Phase 1: start from the all-artificial basis and minimize the
    // artificial mass.  Flip rows so the right-hand side is >= 0.
    Tableau tab;
    tab.T.resize(m, n + m);
    tab.rhs.resize(m);
    tab.basis.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double sign = (b(i) < 0.0) ? -1.0 : 1.0;
        tab.T.row(i).head(n) = sign * A.row(i);
        tab.T.row(i).tail(m).setZero();
        tab.T(i, n + i) = 1.0;
        tab.rhs(i) = sign * b(i);
        tab.basis[static_cast<std::size_t>(i)] = n + i;
    }

    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
    phase1_cost.tail(m).setOnes();
    if (run_simplex(tab, phase1_cost, n + m) == PivotOutcome::Unbounded)
        throw NumericalError("phase-1 objective reported unbounded");

    double artificial_mass = 0.0;
    for (int i = 0; i < m; ++i)
        if (tab.basis[static_cast<std::size_t>(i)] >= n)
            artificial_mass += tab.rhs(i);
    if (artificial_mass > kFeasTol * (1.0 + b.cwiseAbs().sum()))
        return LpSolution{LpStatus::Infeasible, Eigen::VectorXd::Zero(n),
                          0.0};

    // Drive surviving artificials out of the basis; a row where no
    // structural column can pivot is a redundant constraint and is
    // dropped.
    std::vector<int> keep;
    for (int i = 0; i < m; ++i) {
        if (tab.basis[static_cast<std::size_t>(i)] < n) {
            keep.push_back(i);
            continue;
        }
        int piv = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(tab.T(i, j)) > kPivotTol) { piv = j; break; }
        }
        if (piv >= 0) {
            tab.pivot(i, piv);
            keep.push_back(i);
        }
    }
    if (static_cast<int>(keep.size()) < m) {
        Tableau trimmed;
        trimmed.T.resize(static_cast<int>(keep.size()), n + m);
        trimmed.rhs.resize(static_cast<int>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            trimmed.T.row(static_cast<int>(k)) = tab.T.row(keep[k]);
            trimmed.rhs(static_cast<int>(k)) = tab.rhs(keep[k]);
            trimmed.basis.push_back(tab.basis[static_cast<std::size_t>(
                keep[k])]);
        }
        tab = std::move(trimmed);
    }

    // Phase 2: minimize -c'x over the structural columns only.
    Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(n + m);
    phase2_cost.head(n) = -c;
    if (run_simplex(tab, phase2_cost, n) == PivotOutcome::Unbounded)
        return LpSolution{LpStatus::Unbounded, Eigen::VectorXd::Zero(n),
                          0.0};

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < tab.rows(); ++i) {
        const int v = tab.basis[static_cast<std::size_t>(i)];
        if (v < n) sol.x(v) = tab.rhs(i);
    }
    sol.objective = c.dot(sol.x);
    return sol;
}

} // namespace cmdplab
