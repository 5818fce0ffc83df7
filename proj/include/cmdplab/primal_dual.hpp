#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/design.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/sampling.hpp"

namespace cmdplab {

/// Which guarantee the run targets.  Relaxed allows the constraint to be
/// missed by up to epsilon; strict requires it to hold outright, at the
/// price of a conservative threshold shift and a larger iteration count.
enum class FeasibilityMode { Relaxed, Strict };

/// Which solver/evaluator family the schedule is sized for.
enum class Pipeline { Tabular, Linear };

/// Multipliers on the schedule's batch size (c_M) and inner iteration
/// count (c_T).  The defaults are the analysis constants; smaller values
/// trade the certificate for speed and are reported as empirical runs.
struct ScheduleConstants {
    double c_M = 1.0;
    double c_T = 1.0;
};

/// Every derived quantity the primal-dual loop needs, pinned up front so
/// reports can reproduce the run exactly.
struct FrameworkParams {
    FeasibilityMode mode = FeasibilityMode::Relaxed;
    Pipeline pipeline = Pipeline::Tabular;
    double epsilon = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double zeta = 0.0;    ///< Slater slack the schedule is sized for
    double b = 0.0;       ///< original constraint threshold
    double f = 0.0;       ///< inner accuracy knob
    double b_prime = 0.0; ///< shifted threshold used by the dual update
    double U = 0.0;       ///< dual clip upper bound
    double eta = 0.0;     ///< dual step size
    long long K = 0;      ///< dual iteration count actually run
    int T = 0;            ///< inner solver iterations
    int M = 0;            ///< batch size per (pair, iteration)
    double iota = 0.0;    ///< log(2 S A / delta)
    ScheduleConstants constants;
    bool k_overridden = false;
    long long k_schedule = 0; ///< K prescribed by the schedule
};

/// Derives the full schedule from the target accuracy.  Throws
/// ParameterError on out-of-range inputs, or when the tabular analysis
/// precondition T >= 2 ln(T) / gamma fails for the derived T.
FrameworkParams derive_params(FeasibilityMode mode, Pipeline pipeline,
                              double epsilon, double delta, double gamma,
                              double zeta, double b, int num_states,
                              int num_actions, int dim,
                              const ScheduleConstants& constants = {});

/// Replaces the dual iteration count and rescales the step size to
/// match; the result is flagged as an empirical (uncertified) run.
void apply_k_override(FrameworkParams& params, long long k);

/// Solves max_a <r + lambda c, .> for the current dual iterate.  The
/// buffer pointer is null when needs_buffer() is false.
class MdpSolverOracle {
  public:
    virtual ~MdpSolverOracle() = default;
    virtual PolicyPtr solve(const Eigen::MatrixXd& box_reward,
                            const Buffer* buffer) = 0;
    virtual bool needs_buffer() const = 0;
    virtual std::string name() const = 0;
};

/// Estimates the constraint value of the iterate at the initial
/// distribution.
class PolicyEvalOracle {
  public:
    virtual ~PolicyEvalOracle() = default;
    virtual double evaluate(const Policy& pi, const Eigen::MatrixXd& diamond,
                            const Buffer* buffer) = 0;
    virtual bool needs_buffer() const = 0;
    virtual std::string name() const = 0;
};

class TabularMdviSolver final : public MdpSolverOracle {
  public:
    TabularMdviSolver(int T, int M, double gamma)
        : T_(T), M_(M), gamma_(gamma) {}
    PolicyPtr solve(const Eigen::MatrixXd& box_reward,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return true; }
    std::string name() const override { return "tabular-mdvi"; }

  private:
    int T_, M_;
    double gamma_;
};

class LsMdviSolver final : public MdpSolverOracle {
  public:
    LsMdviSolver(int T, int M, double gamma, Design design,
                 FeatureMap features)
        : T_(T), M_(M), gamma_(gamma), design_(std::move(design)),
          features_(std::move(features)) {}
    PolicyPtr solve(const Eigen::MatrixXd& box_reward,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return true; }
    std::string name() const override { return "ls-mdvi"; }

  private:
    int T_, M_;
    double gamma_;
    Design design_;
    FeatureMap features_;
};

/// Ground-truth solver (value iteration on the exact model); used to
/// isolate the dual dynamics from inner-solver error.
class ExactMdpSolver final : public MdpSolverOracle {
  public:
    explicit ExactMdpSolver(const TabularCmdp& m, double tol = 1e-9)
        : m_(&m), tol_(tol) {}
    PolicyPtr solve(const Eigen::MatrixXd& box_reward,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return false; }
    std::string name() const override { return "exact"; }

  private:
    const TabularCmdp* m_;
    double tol_;
};

class TabularPeEvaluator final : public PolicyEvalOracle {
  public:
    TabularPeEvaluator(int T, int M, double gamma, Eigen::VectorXd rho)
        : T_(T), M_(M), gamma_(gamma), rho_(std::move(rho)) {}
    double evaluate(const Policy& pi, const Eigen::MatrixXd& diamond,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return true; }
    std::string name() const override { return "tabular-pe"; }

  private:
    int T_, M_;
    double gamma_;
    Eigen::VectorXd rho_;
};

class LsPeEvaluator final : public PolicyEvalOracle {
  public:
    LsPeEvaluator(int T, int M, double gamma, Design design,
                  FeatureMap features, Eigen::VectorXd rho)
        : T_(T), M_(M), gamma_(gamma), design_(std::move(design)),
          features_(std::move(features)), rho_(std::move(rho)) {}
    double evaluate(const Policy& pi, const Eigen::MatrixXd& diamond,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return true; }
    std::string name() const override { return "ls-pe"; }

  private:
    int T_, M_;
    double gamma_;
    Design design_;
    FeatureMap features_;
    Eigen::VectorXd rho_;
};

/// Ground-truth evaluator.  Results are cached on the bytes of the
/// materialized policy table and payoff table, since the dual loop
/// revisits the same few greedy policies many times.
class ExactPeEvaluator final : public PolicyEvalOracle {
  public:
    explicit ExactPeEvaluator(const TabularCmdp& m,
                              const FeatureMap* features = nullptr)
        : m_(&m), features_(features) {}
    double evaluate(const Policy& pi, const Eigen::MatrixXd& diamond,
                    const Buffer* buffer) override;
    bool needs_buffer() const override { return false; }
    std::string name() const override { return "exact"; }

  private:
    const TabularCmdp* m_;
    const FeatureMap* features_;
    std::unordered_map<std::string, double> cache_;
};

/// One dual iteration as recorded in the run trace.  `lambda` is the
/// value the iterate was computed with, i.e. before the update.
struct TraceRow {
    long long k = 0;
    double lambda = 0.0;
    double vc_hat_rho = 0.0;
    double elapsed_ms = 0.0; ///< 0 unless timings were requested
};

/// Everything a run produces: the mixture policy, the trace, and the
/// exact audit of the output against the instance's true optimum.
struct RunReport {
    FrameworkParams params;
    PolicyPtr mixture; ///< uniform mixture over the K iterates, deduped
    std::vector<TraceRow> trace;
    long long distinct_policies = 0;
    std::uint64_t master_seed = 0;
    std::string solver_name;
    std::string evaluator_name;
    std::string zeta_source; ///< "computed" or "config" (set by the caller)

    // Exact audit (ground-truth oracles, independent of the run path):
    double value_r = 0.0;      ///< exact reward value of the mixture
    double value_c = 0.0;      ///< exact constraint value of the mixture
    double opt_value_r = 0.0;  ///< exact constrained optimum
    bool feasible_ok = false;
    bool optimal_ok = false;
    bool verdict_pass = false;
    std::string guarantee_status; ///< "certified" or "empirical only"

    double buffer_seconds = 0.0; ///< 0 unless timings were requested
    double loop_seconds = 0.0;   ///< 0 unless timings were requested
};

/// Exact verdict of a policy against an instance under a feasibility
/// mode (shared by the run driver's audit and the pure verify path).
struct VerifyResult {
    double value_r = 0.0;
    double value_c = 0.0;
    double opt_value_r = 0.0;
    bool feasible_ok = false;
    bool optimal_ok = false;
    bool verdict_pass = false;
};

/// Evaluates `pi` with the exact oracles and applies the mode's rules:
/// relaxed needs value_c >= b - epsilon, strict needs value_c >= b (up
/// to strictly numerical slack), and both need value_r within epsilon
/// of the exact constrained optimum.  `features` is required when the
/// policy (or a mixture atom) is greedy in a feature map.
VerifyResult verify_policy(const TabularCmdp& m, const Policy& pi,
                           FeasibilityMode mode, double epsilon,
                           const FeatureMap* features = nullptr);

/// Runs the primal-dual loop: collects one shared buffer on `coreset`
/// (skipped when neither oracle needs samples), iterates
///   pi_k = solve(r + lambda_k c),  vhat_k = evaluate(pi_k, c),
///   lambda_{k+1} = clip_{[0, U]}(lambda_k - eta (vhat_k - b')),
/// and returns the uniform mixture of the iterates together with its
/// exact audit.  `features` is required when policies may be greedy in
/// a feature map (the linear pipeline).  When `buffer_out` is non-null
/// the collected buffer is moved into it after the run.
RunReport cmdp_solve(const TabularCmdp& m, const FrameworkParams& params,
                     MdpSolverOracle& solver, PolicyEvalOracle& evaluator,
                     const std::vector<std::pair<int, int>>& coreset,
                     std::uint64_t master_seed, bool timings = false,
                     const FeatureMap* features = nullptr,
                     Buffer* buffer_out = nullptr);

/// Dual regret of the recorded trace against a fixed comparator
/// lambda: sum_k (lambda_k - lambda) * (vhat_k - b').
double dual_regret(const std::vector<TraceRow>& trace, double b_prime,
                   double lambda);

/// Worst-case dual regret over the clip interval [0, U]; the regret is
/// affine in the comparator, so only the endpoints matter.
double dual_regret_max(const std::vector<TraceRow>& trace,
                       const FrameworkParams& params);

/// The bound the dual update guarantees for any comparator in [0, U]:
/// U sqrt(K) / (1 - gamma).
double dual_regret_limit(const FrameworkParams& params);

/// One point of the estimator-error scaling study.
struct ScalingPoint {
    int n = 0;                   ///< batch size per (pair, iteration)
    double mean_abs_error = 0.0; ///< mean |vhat - v| over repetitions
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    double slope = 0.0; ///< least-squares slope of log(err) vs log(n)
    /// Reference the errors are measured against: the estimator's
    /// infinite-batch value at this T (the evaluation recursion driven
    /// by true expectations), so deviations are pure sampling error.
    double exact_value = 0.0;
};

/// Repeatedly evaluates `pi`'s constraint value with a sampled
/// evaluator at fixed T across a grid of batch sizes, and fits the
/// log-log error slope (1/sqrt(n) concentration shows as -0.5).  With
/// `features` and `design` the estimator is the least-squares evaluator
/// on the design's coreset; otherwise the tabular evaluator on the full
/// pair set.
ScalingResult scaling_experiment(const TabularCmdp& m, const Policy& pi,
                                 int T, const std::vector<int>& n_grid,
                                 int repetitions, std::uint64_t master_seed,
                                 const FeatureMap* features = nullptr,
                                 const Design* design = nullptr);

} // namespace cmdplab
