// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmdplab/rng.hpp"

namespace cmdplab {

/// Model/design/policy data failed its documented invariants.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (residual too large, singular matrix,
/// non-convergence, LP breakdown).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parameter combination is rejected before any computation runs.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Discounted constrained MDP with one reward signal r, one constraint
/// signal c and threshold b: maximize the discounted r-return from rho
/// subject to the discounted c-return from rho being at least b.
///
/// Layout conventions used across the toolkit:
///   - state-action pairs are indexed sa = s * num_actions + a;
///   - P is (S*A) x S, row sa holding the next-state distribution;
///   - r, c are S x A; values live in [0, 1]; gamma in [0, 1).
struct TabularCmdp {
    int num_states = 0;
    int num_actions = 0;
    double gamma = 0.0;
    double b = 0.0;
    Eigen::VectorXd rho; // initial distribution, size S
    Eigen::MatrixXd r;   // S x A
    Eigen::MatrixXd c;   // S x A
    Eigen::MatrixXd P;   // (S*A) x S, row-stochastic

    int pair_count() const { return num_states * num_actions; }
    int pair_id(int s, int a) const { return s * num_actions + a; }
    /// Effective horizon 1/(1-gamma).
    double horizon() const { return 1.0 / (1.0 - gamma); }
};

/// Feature map phi : S x A -> R^d with full column rank.
struct FeatureMap {
    int num_states = 0;
    int num_actions = 0;
    int dim = 0;
    Eigen::MatrixXd phi; // (S*A) x d, row sa = s * num_actions + a

    int pair_count() const { return num_states * num_actions; }
    Eigen::RowVectorXd row(int s, int a) const {
        return phi.row(s * num_actions + a);
    }
    /// Identity features: d = S*A, phi = I. The tabular solvers are the
    /// special case of the least-squares solvers under this map.
    static FeatureMap one_hot(int num_states, int num_actions);
};

/// Linearly realizable CMDP: P(.|s,a) = sum_j phi_j(s,a) * anchor_j,
/// r = phi * psi_r, c = phi * psi_c. Carries the explicit tabular model so
/// exact oracles stay available.
struct LinearCmdp {
    TabularCmdp tab;
    FeatureMap features;
    Eigen::VectorXd psi_r;   // d
    Eigen::VectorXd psi_c;   // d
    Eigen::MatrixXd anchors; // d x S, row j = anchor distribution mu_j
};

/// Validation tolerances (module constants, pinned once here).
namespace tol {
inline constexpr double row_stochastic = 1e-12;  // per-row sum error
inline constexpr double feature_rank = 1e-9;     // smallest singular value
inline constexpr double reconstruction = 1e-10;  // linear model residuals
inline constexpr double policy_row = 1e-12;      // policy row sums
} // namespace tol

/// Structural validation. Returns a list of human-readable violations;
/// empty means valid. Never throws on bad data.
std::vector<std::string> validate(const TabularCmdp& m);
std::vector<std::string> validate(const FeatureMap& f);
std::vector<std::string> validate(const LinearCmdp& m);

/// Throws ValidationError with the joined violation list if any.
void require_valid(const TabularCmdp& m);
void require_valid(const FeatureMap& f);
void require_valid(const LinearCmdp& m);

/// One generative-model draw: next state from P(.|s,a) by inverse-CDF over
/// the stored row, consuming exactly one uniform from the stream.
int gen_sample(const TabularCmdp& m, int s, int a, RngStream& stream);

/// Sampling access to a transition model. The contract mirrors gen_sample:
/// deterministic given the stream state, exactly one draw per call.
class GenerativeModel {
  public:
    virtual ~GenerativeModel() = default;
    virtual int num_states() const = 0;
    virtual int num_actions() const = 0;
    virtual int sample(int s, int a, RngStream& stream) const = 0;
};

/// GenerativeModel over an explicit TabularCmdp (does not own it).
class TabularGenerativeModel final : public GenerativeModel {
  public:
    explicit TabularGenerativeModel(const TabularCmdp& m) : model_(&m) {}
    int num_states() const override { return model_->num_states; }
    int num_actions() const override { return model_->num_actions; }
    int sample(int s, int a, RngStream& stream) const override {
        return gen_sample(*model_, s, a, stream);
    }

  private:
    const TabularCmdp* model_;
};

/// JSON (de)serialization; round-trips are value-identical (shortest
/// round-trip double formatting). Linear files carry the tabular fields
/// plus {d, phi, psi_r, psi_c, anchors}; is_linear_cmdp_file distinguishes
/// the two by the presence of "phi".
std::string to_json_string(const TabularCmdp& m);
std::string to_json_string(const LinearCmdp& m);
TabularCmdp tabular_cmdp_from_json(const std::string& text);
LinearCmdp linear_cmdp_from_json(const std::string& text);
bool is_linear_cmdp_file(const std::string& text);

void save_tabular_cmdp(const TabularCmdp& m, const std::string& path);
void save_linear_cmdp(const LinearCmdp& m, const std::string& path);
TabularCmdp load_tabular_cmdp(const std::string& path);
LinearCmdp load_linear_cmdp(const std::string& path);

/// Slurp/overwrite text files (shared by report and CLI I/O).
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace cmdplab
