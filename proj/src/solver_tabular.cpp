#include "cmdplab/solver_tabular.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace cmdplab {

namespace {

void check_box(const Eigen::MatrixXd& box, int S, int A, const char* who) {
    if (box.rows() != S || box.cols() != A)
        throw ParameterError(std::string(who) + ": reward table is " +
                             std::to_string(box.rows()) + " x " +
                             std::to_string(box.cols()) + ", expected " +
                             std::to_string(S) + " x " + std::to_string(A));
    if (!box.allFinite())
        throw ParameterError(std::string(who) +
                             ": reward table has non-finite entries");
}

IterationDiag table_diag(int t, const Eigen::MatrixXd& q_hat) {
    IterationDiag d;
    d.t = t;
    d.theta_l2 = q_hat.norm();
    d.q_max_abs = q_hat.cwiseAbs().maxCoeff();
    d.max_residual = 0.0; // tabular targets are fitted exactly
    return d;
}

/// Shared recursion for both the sampled and the exact-model variant.
/// `targets(t, v_hat)` returns the S x A table Qhat^t built from the
/// previous value estimate; everything downstream of the targets is
/// identical between the two.
template <typename TargetsFn>
TabularSolveResult mdvi_loop(int T, int S, int A, TargetsFn&& targets,
                             const SolverOptions& opts) {
    TabularSolveResult out;
    out.q_tilde = Eigen::MatrixXd::Zero(S, A);
    out.diag.reserve(static_cast<std::size_t>(T));
    if (opts.keep_tables) {
        out.q_hat_tables.reserve(static_cast<std::size_t>(T));
        out.v_hat_values.reserve(static_cast<std::size_t>(T));
    }

    Eigen::VectorXd v_hat = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd prev_max = Eigen::VectorXd::Zero(S);
    for (int t = 1; t <= T; ++t) {
        const Eigen::MatrixXd q_hat = targets(t, v_hat);
        out.q_tilde += q_hat;
        const Eigen::VectorXd cur_max = detail::per_state_max(out.q_tilde);
        v_hat = cur_max - prev_max;
        prev_max = cur_max;
        out.diag.push_back(table_diag(t, q_hat));
        if (opts.keep_tables) {
            out.q_hat_tables.push_back(q_hat);
            out.v_hat_values.push_back(v_hat);
        }
    }

    std::vector<int> actions(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        actions[static_cast<std::size_t>(s)] =
            argmax_lowest(out.q_tilde.row(s));
    out.policy = Policy::deterministic(std::move(actions));
    return out;
}

} // namespace

TabularSolveResult tabular_mdvi(int T, int M, double gamma,
                                const Eigen::MatrixXd& box_reward,
                                const Buffer& buffer,
                                const SolverOptions& opts) {
    const int S = static_cast<int>(box_reward.rows());
    const int A = static_cast<int>(box_reward.cols());
    check_box(box_reward, S, A, "tabular_mdvi");
    detail::require_schedule(buffer, T, M, "tabular_mdvi");
    detail::require_full_coreset(buffer, S, A, "tabular_mdvi");

    auto targets = [&](int t, const Eigen::VectorXd& v_hat) {
        Eigen::MatrixXd q(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                q(s, a) = box_reward(s, a) +
                          detail::discounted_batch_mean(buffer, s * A + a,
                                                        t - 1, gamma, v_hat);
        return q;
    };
    return mdvi_loop(T, S, A, targets, opts);
}

TabularSolveResult tabular_mdvi_exact(int T, const TabularCmdp& m,
                                      const Eigen::MatrixXd& box_reward,
                                      const SolverOptions& opts) {
    const int S = m.num_states;
    const int A = m.num_actions;
    check_box(box_reward, S, A, "tabular_mdvi_exact");
    if (T < 1) throw ParameterError("tabular_mdvi_exact: T must be >= 1");

    auto targets = [&](int /*t*/, const Eigen::VectorXd& v_hat) {
        Eigen::MatrixXd q(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                q(s, a) = box_reward(s, a) +
                          m.gamma * m.P.row(m.pair_id(s, a)).dot(v_hat);
        return q;
    };
    return mdvi_loop(T, S, A, targets, opts);
}

PeResult tabular_pe(int T, int M, double gamma,
                    const Eigen::MatrixXd& diamond, const Buffer& buffer,
                    const Policy& pi, const Eigen::VectorXd& rho,
                    const FeatureMap* features, const SolverOptions& opts) {
    const int S = static_cast<int>(diamond.rows());
    const int A = static_cast<int>(diamond.cols());
    check_box(diamond, S, A, "tabular_pe");
    detail::require_schedule(buffer, T, M, "tabular_pe");
    detail::require_full_coreset(buffer, S, A, "tabular_pe");
    if (rho.size() != S)
        throw ParameterError("tabular_pe: rho has length " +
                             std::to_string(rho.size()) + ", expected " +
                             std::to_string(S));
    const Eigen::MatrixXd pi_table = materialize(pi, S, A, features);

    PeResult out;
    out.diag.reserve(static_cast<std::size_t>(T));
    if (opts.keep_tables) {
        out.q_targets.reserve(static_cast<std::size_t>(T));
        out.v_hat_values.reserve(static_cast<std::size_t>(T));
    }

    Eigen::VectorXd v_hat = Eigen::VectorXd::Zero(S);
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        Eigen::MatrixXd q(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                q(s, a) = diamond(s, a) +
                          detail::discounted_batch_mean(buffer, s * A + a,
                                                        t - 1, gamma, v_hat);
        v_hat = detail::policy_backup(pi_table, q);
        acc += detail::dot_strict(rho, v_hat);
        out.diag.push_back(table_diag(t, q));
        if (opts.keep_tables) {
            out.q_targets.emplace_back(
                q.reshaped<Eigen::RowMajor>().eval());
            out.v_hat_values.push_back(v_hat);
        }
    }
    out.v_bar_rho = acc / static_cast<double>(T);
    return out;
}

} // namespace cmdplab
