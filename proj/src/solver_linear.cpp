#include "cmdplab/solver_linear.hpp"

#include <string>
#include <utility>

namespace cmdplab {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

void check_linear_inputs(const Eigen::MatrixXd& box, const Buffer& buffer,
                         const Design& design, const FeatureMap& features,
                         const char* who) {
    const int S = features.num_states;
    const int A = features.num_actions;
    if (box.rows() != S || box.cols() != A)
        throw ParameterError(std::string(who) + ": reward table is " +
                             std::to_string(box.rows()) + " x " +
                             std::to_string(box.cols()) + ", expected " +
                             std::to_string(S) + " x " + std::to_string(A));
    if (!box.allFinite())
        throw ParameterError(std::string(who) +
                             ": reward table has non-finite entries");
    if (design.dim() != features.dim)
        throw ParameterError(std::string(who) + ": design dimension " +
                             std::to_string(design.dim()) +
                             " != feature dimension " +
                             std::to_string(features.dim));
    if (buffer.num_pairs() != design.size())
        throw ParameterError(std::string(who) + ": buffer covers " +
                             std::to_string(buffer.num_pairs()) +
                             " pairs, design coreset has " +
                             std::to_string(design.size()));
    for (int i = 0; i < design.size(); ++i)
        if (buffer.coreset[static_cast<std::size_t>(i)] !=
            design.coreset[static_cast<std::size_t>(i)])
            throw ParameterError(std::string(who) +
                                 ": buffer was not collected on the "
                                 "design coreset (mismatch at position " +
                                 std::to_string(i) + ")");
}

Eigen::VectorXd regression_targets(const Eigen::MatrixXd& box,
                                   const Buffer& buffer,
                                   const Design& design, double gamma,
                                   int t, const Eigen::VectorXd& v_hat) {
    Eigen::VectorXd z(design.size());
    for (int i = 0; i < design.size(); ++i) {
        const auto& sa = design.coreset[static_cast<std::size_t>(i)];
        z(i) = box(sa.first, sa.second) +
               detail::discounted_batch_mean(buffer, i, t - 1, gamma, v_hat);
    }
    return z;
}

IterationDiag linear_diag(int t, const Eigen::VectorXd& theta,
                          const Eigen::VectorXd& q_flat,
                          const Eigen::VectorXd& z, const Design& design) {
    IterationDiag d;
    d.t = t;
    d.theta_l2 = theta.norm();
    d.q_max_abs = q_flat.cwiseAbs().maxCoeff();
    d.max_residual =
        (design.phi_coreset * theta - z).cwiseAbs().maxCoeff();
    return d;
}

} // namespace

LinearSolveResult ls_mdvi(int T, int M, double gamma,
                          const Eigen::MatrixXd& box_reward,
                          const Buffer& buffer, const Design& design,
                          const FeatureMap& features,
                          const SolverOptions& opts) {
    check_linear_inputs(box_reward, buffer, design, features, "ls_mdvi");
    detail::require_schedule(buffer, T, M, "ls_mdvi");
    const int S = features.num_states;
    const int A = features.num_actions;

    LinearSolveResult out;
    out.theta_sum = Eigen::VectorXd::Zero(features.dim);
    out.q_tilde = Eigen::MatrixXd::Zero(S, A);
    out.diag.reserve(static_cast<std::size_t>(T));
    if (opts.keep_tables) {
        out.theta_list.reserve(static_cast<std::size_t>(T));
        out.q_hat_values.reserve(static_cast<std::size_t>(T));
        out.v_hat_values.reserve(static_cast<std::size_t>(T));
    }

    Eigen::VectorXd v_hat = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd prev_max = Eigen::VectorXd::Zero(S);
    for (int t = 1; t <= T; ++t) {
        const Eigen::VectorXd z =
            regression_targets(box_reward, buffer, design, gamma, t, v_hat);
        const Eigen::VectorXd theta = wls_solve(design, z);
        const Eigen::VectorXd q_flat = features.phi * theta;
        out.theta_sum += theta;
        out.q_tilde += RowMajorMap(q_flat.data(), S, A);
        const Eigen::VectorXd cur_max = detail::per_state_max(out.q_tilde);
        v_hat = cur_max - prev_max;
        prev_max = cur_max;
        out.diag.push_back(linear_diag(t, theta, q_flat, z, design));
        if (opts.keep_tables) {
            out.theta_list.push_back(theta);
            out.q_hat_values.push_back(q_flat);
            out.v_hat_values.push_back(v_hat);
        }
    }
    out.policy = Policy::greedy_linear(out.theta_sum);
    return out;
}

PeResult ls_pe(int T, int M, double gamma, const Eigen::MatrixXd& diamond,
               const Buffer& buffer, const Policy& pi, const Design& design,
               const FeatureMap& features, const Eigen::VectorXd& rho,
               const SolverOptions& opts) {
    check_linear_inputs(diamond, buffer, design, features, "ls_pe");
    detail::require_schedule(buffer, T, M, "ls_pe");
    const int S = features.num_states;
    const int A = features.num_actions;
    if (rho.size() != S)
        throw ParameterError("ls_pe: rho has length " +
                             std::to_string(rho.size()) + ", expected " +
                             std::to_string(S));
    const Eigen::MatrixXd pi_table = materialize(pi, S, A, &features);

    PeResult out;
    out.diag.reserve(static_cast<std::size_t>(T));
    if (opts.keep_tables) {
        out.q_targets.reserve(static_cast<std::size_t>(T));
        out.v_hat_values.reserve(static_cast<std::size_t>(T));
    }

    Eigen::VectorXd v_hat = Eigen::VectorXd::Zero(S);
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        const Eigen::VectorXd z =
            regression_targets(diamond, buffer, design, gamma, t, v_hat);
        const Eigen::VectorXd theta = wls_solve(design, z);
        const Eigen::VectorXd q_flat = features.phi * theta;
        v_hat = detail::policy_backup(pi_table, RowMajorMap(q_flat.data(), S, A));
        acc += detail::dot_strict(rho, v_hat);
        out.diag.push_back(linear_diag(t, theta, q_flat, z, design));
        if (opts.keep_tables) {
            out.q_targets.push_back(q_flat);
            out.v_hat_values.push_back(v_hat);
        }
    }
    out.v_bar_rho = acc / static_cast<double>(T);
    return out;
}

} // namespace cmdplab
