// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"

namespace cmdplab {

/// A weighted coreset of state-action pairs with its design matrix
///   G = sum_i weights[i] * phi_i phi_i'
/// and realized worst-case variance proxy
///   g_value = max over ALL pairs of phi' G^{-1} phi.
struct Design {
    std::vector<std::pair<int, int>> coreset; ///< (s, a), insertion order
    Eigen::VectorXd weights;      ///< per coreset element, > 0, sums to 1
    Eigen::MatrixXd phi_coreset;  ///< |C| x d, cached feature rows
    Eigen::MatrixXd G;
    Eigen::MatrixXd G_inv;
    double g_value = 0.0;
    bool condition_warning = false; ///< cond(G) above 1e12
    double condition_estimate = 0.0;

    int size() const { return static_cast<int>(coreset.size()); }
    int dim() const { return static_cast<int>(G.rows()); }
};

namespace design_tol {
inline constexpr double weight_sum = 1e-10;
inline constexpr double min_eigenvalue = 1e-12;
inline constexpr double kw_slack = 1e-9;
inline constexpr double condition_limit = 1e12;
} // namespace design_tol

/// Deterministic seeding pass: walk d direction rounds, each taking the
/// extreme feature pair along the current direction and turning toward
/// a direction orthogonal to everything discovered so far; returns
/// equal weights on the distinct collected pairs.  If the resulting G
/// is singular, extra extreme pairs along null directions are added;
/// a direction along which every feature row agrees proves the feature
/// matrix rank-deficient and raises ValidationError naming it.
Design initialize_design(const FeatureMap& features);

/// Frank-Wolfe refinement on top of initialize_design: while the
/// relative gap delta = (max nu - d)/d exceeds eps_fw, shift mass
/// eta* = (nu - d)/((d-1) nu) onto the worst pair; afterwards trim the
/// coreset to pairs with
///   nu >= d (1 + delta d/2 - sqrt(delta (d-1) + delta^2 d^2 / 4)),
/// renormalize, recompute G, and reduce the support to at most
/// d(d+1)/2 + 1 points by a null-space walk on (vech(phi phi'), 1)
/// rows, which preserves G.  If the realized g_value still exceeds 2d
/// the loop restarts with eps_fw halved.  max_iters < 0 selects the
/// default 10 d ln(d) + 100 (ln floored at 1).  When `max_nu_trace` is
/// non-null it receives max nu at the start of every mass-shifting
/// iteration (the sequence the descent argument says is non-increasing).
Design frank_wolfe(const FeatureMap& features, double eps_fw = 0.5,
                   long max_iters = -1,
                   std::vector<double>* max_nu_trace = nullptr);

/// Design-weighted least squares in closed form:
///   W(z) = G^{-1} sum_i weights[i] * z[i] * phi_i.
/// When |C| = d the unique minimizer interpolates the coreset exactly,
/// so the implementation solves the square system phi_coreset W = z
/// instead; on one-hot features this makes wls_solve the bitwise
/// identity on coreset values.  z must have one entry per coreset
/// element, in coreset order.
Eigen::VectorXd wls_solve(const Design& design, const Eigen::VectorXd& z);

/// Extrapolation audit: predictions anywhere are at most sqrt(2d)
/// times the largest coreset target in magnitude.
struct KwCheck {
    double ratio = 0.0;
    bool pass = false;
};
KwCheck kw_check(const Design& design, const FeatureMap& features,
                 const Eigen::VectorXd& z);

std::string design_to_json_string(const Design& d);
/// Rebuild a Design from its JSON form; G, G_inv and phi rows are
/// recomputed from the feature map, and the stored g_value must agree
/// with the recomputed one within 1e-9.
Design design_from_json(const std::string& text, const FeatureMap& features);

} // namespace cmdplab
