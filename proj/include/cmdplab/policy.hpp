// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"

namespace cmdplab {

/// Index of the largest entry of a row, breaking ties toward the
/// lowest index.  Every argmax in the toolkit goes through this helper
/// so tie-breaking is uniform everywhere.
int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

enum class PolicyKind { Stochastic, Deterministic, GreedyLinear, Mixture };

struct Policy;
using PolicyPtr = std::shared_ptr<const Policy>;

/// A policy in one of four concrete representations:
///  - Stochastic:    S x A row-stochastic action-probability table.
///  - Deterministic: one action index per state.
///  - GreedyLinear:  act greedily on the linear score  phi(s,a)' theta.
///  - Mixture:       a finite mixture over other policies; the agent
///                   draws one component at episode start and follows it.
struct Policy {
    PolicyKind kind = PolicyKind::Stochastic;

    // Stochastic
    Eigen::MatrixXd probs; // S x A, rows sum to 1

    // Deterministic
    std::vector<int> actions; // length S

    // GreedyLinear
    Eigen::VectorXd theta; // length d

    // Mixture
    std::vector<PolicyPtr> atoms;
    std::vector<double> weights; // same length as atoms, sums to 1

    static PolicyPtr stochastic(Eigen::MatrixXd probs);
    static PolicyPtr deterministic(std::vector<int> actions);
    static PolicyPtr greedy_linear(Eigen::VectorXd theta);
    static PolicyPtr mixture(std::vector<PolicyPtr> atoms,
                             std::vector<double> weights);
    /// Uniform mixture over the given component policies.
    static PolicyPtr uniform_mixture(std::vector<PolicyPtr> atoms);
};

/// Materialize a policy as an S x A action-probability table for the
/// given model.  GreedyLinear needs the feature map; passing features
/// whose dimension does not match theta throws ParameterError.
/// Mixtures are flattened: duplicate atoms (bitwise-equal materialized
/// tables) are merged by summing their weights before averaging, so a
/// mixture of K copies of one policy materializes exactly to that
/// policy's table.
Eigen::MatrixXd materialize(const Policy& pi, int num_states,
                            int num_actions,
                            const FeatureMap* features = nullptr);

/// Validation for stochastic tables: shape, nonnegativity, rows sum to
/// 1 within tol::policy_row.
std::vector<std::string> validate_policy_table(const Eigen::MatrixXd& probs,
                                               int num_states,
                                               int num_actions);

/// JSON round-trip.  The on-disk form records the kind and the fields
/// that kind uses; mixtures nest their atoms.
std::string policy_to_json_string(const Policy& pi);
PolicyPtr policy_from_json(const std::string& text);

void save_policy(const Policy& pi, const std::string& path);
PolicyPtr load_policy(const std::string& path);

} // namespace cmdplab
