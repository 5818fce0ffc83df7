// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/sampling.hpp"

namespace cmdplab {

/// One row of the per-iteration diagnostics CSV shared by all solvers:
/// parameter norm, fitted-value sup norm (the boundedness audit), and
/// worst regression residual on the coreset (identically 0 in tabular
/// mode, where no regression happens).
struct IterationDiag {
    int t = 0;
    double theta_l2 = 0.0;
    double q_max_abs = 0.0;
    double max_residual = 0.0;
};

struct SolverOptions {
    /// Retain per-iteration target vectors and value functions, used by
    /// the bit-level equivalence tests.  Off by default: the outer
    /// primal-dual loop calls solvers thousands of times.
    bool keep_tables = false;
};

/// Result of a policy-evaluation run (tabular or least-squares).
struct PeResult {
    double v_bar_rho = 0.0; ///< (1/T) sum_t Vhat^t(rho)
    std::vector<IterationDiag> diag;
    // Populated only with SolverOptions::keep_tables:
    std::vector<Eigen::VectorXd> q_targets;     ///< per t, pair-major
    std::vector<Eigen::VectorXd> v_hat_values;  ///< per t, length S
};

namespace detail {

/// gamma * (sum over the cell's count table of count * v[s']) / M.
/// States are visited in ascending order — every consumer shares this
/// summation order, which is what makes the one-hot equivalence between
/// solver families hold bit for bit.
inline double discounted_batch_mean(const Buffer& buf, int ci, int t,
                                    double gamma,
                                    const Eigen::VectorXd& v) {
    const int cell = buf.cell(ci, t);
    const std::int64_t lo =
        buf.cell_offsets[static_cast<std::size_t>(cell)];
    const std::int64_t hi =
        buf.cell_offsets[static_cast<std::size_t>(cell) + 1];
    double sum = 0.0;
    for (std::int64_t i = lo; i < hi; ++i)
        sum += static_cast<double>(
                   buf.count_values[static_cast<std::size_t>(i)]) *
               v(buf.count_states[static_cast<std::size_t>(i)]);
    return gamma * (sum / static_cast<double>(buf.M));
}

/// v(s) = sum_a pi(s,a) q(s,a), ascending action order.
inline Eigen::VectorXd policy_backup(const Eigen::MatrixXd& pi_table,
                                     const Eigen::MatrixXd& q) {
    Eigen::VectorXd v(q.rows());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        double acc = 0.0;
        for (Eigen::Index a = 0; a < q.cols(); ++a)
            acc += pi_table(s, a) * q(s, a);
        v(s) = acc;
    }
    return v;
}

inline Eigen::VectorXd per_state_max(const Eigen::MatrixXd& q) {
    Eigen::VectorXd v(q.rows());
    for (Eigen::Index s = 0; s < q.rows(); ++s) v(s) = q.row(s).maxCoeff();
    return v;
}

/// rho . v with a fixed left-to-right order.
inline double dot_strict(const Eigen::VectorXd& rho,
                         const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < rho.size(); ++s) acc += rho(s) * v(s);
    return acc;
}

inline void require_schedule(const Buffer& buf, int T, int M,
                             const char* who) {
    if (T < 1) throw ParameterError(std::string(who) + ": T must be >= 1");
    if (buf.T < T)
        throw ParameterError(std::string(who) + ": buffer holds only " +
                             std::to_string(buf.T) + " batches, need " +
                             std::to_string(T));
    if (buf.M != M)
        throw ParameterError(std::string(who) + ": buffer batch size " +
                             std::to_string(buf.M) + " != requested M = " +
                             std::to_string(M));
}

inline void require_full_coreset(const Buffer& buf, int S, int A,
                                 const char* who) {
    if (buf.num_pairs() != S * A)
        throw ParameterError(std::string(who) +
                             ": buffer coreset must cover all of S x A");
    for (int p = 0; p < S * A; ++p) {
        const auto& sa = buf.coreset[static_cast<std::size_t>(p)];
        if (sa.first != p / A || sa.second != p % A)
            throw ParameterError(std::string(who) +
                                 ": buffer coreset must enumerate pairs "
                                 "in row-major (s, a) order");
    }
}

} // namespace detail
} // namespace cmdplab
