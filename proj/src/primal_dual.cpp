#include "cmdplab/primal_dual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "cmdplab/oracle.hpp"
#include "cmdplab/rng.hpp"
#include "cmdplab/solver_linear.hpp"
#include "cmdplab/solver_tabular.hpp"

namespace cmdplab {

namespace {

constexpr double kVerdictSlack = 1e-9;   // rounding slack on epsilon checks
constexpr double kStrictFeasTol = 1e-6;  // strict-mode constraint tolerance
constexpr long long kMaxDualIters = 9'000'000'000'000'000LL;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch())
        .count();
}

int ceil_to_int(double x, const char* what) {
    const double up = std::ceil(x);
    if (!(up >= 1.0)) return 1;
    if (up > static_cast<double>(std::numeric_limits<int>::max()))
        throw ParameterError(std::string("derive_params: ") + what +
                             " overflows int (" + std::to_string(up) +
                             "); loosen epsilon or the constants");
    return static_cast<int>(up);
}

std::string table_key(const Eigen::MatrixXd& table) {
    return std::string(reinterpret_cast<const char*>(table.data()),
                       sizeof(double) * static_cast<std::size_t>(
                                            table.size()));
}

} // namespace

FrameworkParams derive_params(FeasibilityMode mode, Pipeline pipeline,
                              double epsilon, double delta, double gamma,
                              double zeta, double b, int num_states,
                              int num_actions, int dim,
                              const ScheduleConstants& constants) {
    if (!(epsilon > 0.0))
        throw ParameterError("derive_params: epsilon must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
        throw ParameterError("derive_params: delta must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ParameterError("derive_params: gamma must lie in [0, 1)");
    if (!(zeta > 0.0))
        throw ParameterError(
            "derive_params: the Slater slack zeta must be > 0; the "
            "framework has no guarantee without a strictly feasible policy");
    if (!(b >= 0.0))
        throw ParameterError("derive_params: threshold b must be >= 0");
    if (num_states < 1 || num_actions < 1)
        throw ParameterError(
            "derive_params: need at least one state and one action");
    if (pipeline == Pipeline::Linear && dim < 1)
        throw ParameterError(
            "derive_params: the linear pipeline needs dim >= 1");
    if (!(constants.c_M > 0.0 && constants.c_T > 0.0))
        throw ParameterError(
            "derive_params: schedule constants must be > 0");

    FrameworkParams p;
    p.mode = mode;
    p.pipeline = pipeline;
    p.epsilon = epsilon;
    p.delta = delta;
    p.gamma = gamma;
    p.zeta = zeta;
    p.b = b;
    p.constants = constants;

    const double H = 1.0 / (1.0 - gamma);
    if (mode == FeasibilityMode::Relaxed) {
        p.f = epsilon / 6.0;
        p.b_prime = b - 2.0 * p.f;
    } else {
        p.f = std::min(epsilon * zeta * (1.0 - gamma) / 16.0, zeta / 6.0);
        p.b_prime = b + 4.0 * p.f;
    }
    p.U = 2.0 / (zeta * (1.0 - gamma));

    const double k_real = std::ceil((p.U * H / p.f) * (p.U * H / p.f));
    if (!(k_real <= static_cast<double>(kMaxDualIters)))
        throw ParameterError(
            "derive_params: the schedule asks for more than 9e15 dual "
            "iterations; loosen epsilon");
    p.k_schedule = static_cast<long long>(k_real);
    p.K = p.k_schedule;
    p.eta = p.U * (1.0 - gamma) / std::sqrt(static_cast<double>(p.K));

    p.iota = std::log(2.0 * num_states * num_actions / delta);
    p.T = ceil_to_int(constants.c_T * H * H / p.f, "T");
    if (pipeline == Pipeline::Linear)
        p.M = ceil_to_int(constants.c_M * dim * H * H * p.iota / p.f, "M");
    else
        p.M = ceil_to_int(constants.c_M * H * p.iota * p.iota / p.f, "M");

    if (pipeline == Pipeline::Tabular && gamma > 0.0) {
        const double need = 2.0 * std::log(static_cast<double>(p.T)) / gamma;
        if (static_cast<double>(p.T) < need)
            throw ParameterError(
                "derive_params: tabular analysis needs T >= 2 ln(T) / "
                "gamma, but T = " +
                std::to_string(p.T) + " < " + std::to_string(need) +
                "; raise c_T");
    }
    return p;
}

void apply_k_override(FrameworkParams& params, long long k) {
    if (k < 1)
        throw ParameterError("apply_k_override: K must be >= 1");
    params.K = k;
    params.eta = params.U * (1.0 - params.gamma) /
                 std::sqrt(static_cast<double>(k));
    params.k_overridden = true;
}

PolicyPtr TabularMdviSolver::solve(const Eigen::MatrixXd& box_reward,
                                   const Buffer* buffer) {
    if (buffer == nullptr)
        throw ParameterError("tabular-mdvi: no sample buffer was collected");
    return tabular_mdvi(T_, M_, gamma_, box_reward, *buffer).policy;
}

PolicyPtr LsMdviSolver::solve(const Eigen::MatrixXd& box_reward,
                              const Buffer* buffer) {
    if (buffer == nullptr)
        throw ParameterError("ls-mdvi: no sample buffer was collected");
    return ls_mdvi(T_, M_, gamma_, box_reward, *buffer, design_, features_)
        .policy;
}

PolicyPtr ExactMdpSolver::solve(const Eigen::MatrixXd& box_reward,
                                const Buffer*) {
    return exact_mdp_optimum(*m_, box_reward, tol_).policy;
}

double TabularPeEvaluator::evaluate(const Policy& pi,
                                    const Eigen::MatrixXd& diamond,
                                    const Buffer* buffer) {
    if (buffer == nullptr)
        throw ParameterError("tabular-pe: no sample buffer was collected");
    return tabular_pe(T_, M_, gamma_, diamond, *buffer, pi, rho_).v_bar_rho;
}

double LsPeEvaluator::evaluate(const Policy& pi,
                               const Eigen::MatrixXd& diamond,
                               const Buffer* buffer) {
    if (buffer == nullptr)
        throw ParameterError("ls-pe: no sample buffer was collected");
    return ls_pe(T_, M_, gamma_, diamond, *buffer, pi, design_, features_,
                 rho_)
        .v_bar_rho;
}

double ExactPeEvaluator::evaluate(const Policy& pi,
                                  const Eigen::MatrixXd& diamond,
                                  const Buffer*) {
    const Eigen::MatrixXd table =
        materialize(pi, m_->num_states, m_->num_actions, features_);
    std::string key = table_key(table);
    key += table_key(diamond);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double v = exact_policy_value_table(*m_, table, diamond).v_rho;
    cache_.emplace(std::move(key), v);
    return v;
}

VerifyResult verify_policy(const TabularCmdp& m, const Policy& pi,
                           FeasibilityMode mode, double epsilon,
                           const FeatureMap* features) {
    const OccupancySolution opt = exact_cmdp_solve(m);
    if (!opt.feasible)
        throw ValidationError(
            "verify_policy: the instance has no feasible policy; the "
            "framework requires a strictly feasible one");
    VerifyResult v;
    v.value_r = mixture_value(m, pi, ValueKind::Reward, features);
    v.value_c = mixture_value(m, pi, ValueKind::Constraint, features);
    v.opt_value_r = opt.value_r;
    if (mode == FeasibilityMode::Relaxed)
        v.feasible_ok = v.value_c >= m.b - epsilon - kVerdictSlack;
    else
        v.feasible_ok = v.value_c >= m.b - kStrictFeasTol;
    v.optimal_ok = v.value_r >= v.opt_value_r - epsilon - kVerdictSlack;
    v.verdict_pass = v.feasible_ok && v.optimal_ok;
    return v;
}

RunReport cmdp_solve(const TabularCmdp& m, const FrameworkParams& params,
                     MdpSolverOracle& solver, PolicyEvalOracle& evaluator,
                     const std::vector<std::pair<int, int>>& coreset,
                     std::uint64_t master_seed, bool timings,
                     const FeatureMap* features, Buffer* buffer_out) {
    if (params.K < 1)
        throw ParameterError("cmdp_solve: params.K must be >= 1");
    if (!(params.eta > 0.0))
        throw ParameterError("cmdp_solve: params.eta must be > 0");
    if (!(params.U > 0.0))
        throw ParameterError("cmdp_solve: params.U must be > 0");
    require_valid(m);

    RunReport report;
    report.params = params;
    report.master_seed = master_seed;
    report.solver_name = solver.name();
    report.evaluator_name = evaluator.name();
    report.trace.reserve(static_cast<std::size_t>(params.K));

    const bool need_buffer =
        solver.needs_buffer() || evaluator.needs_buffer();
    Buffer buffer;
    const Buffer* buffer_ptr = nullptr;
    if (need_buffer) {
        const double t0 = timings ? now_seconds() : 0.0;
        const TabularGenerativeModel model(m);
        buffer =
            data_collection(model, coreset, params.T, params.M, master_seed);
        buffer_ptr = &buffer;
        if (timings) report.buffer_seconds = now_seconds() - t0;
    }

    std::unordered_map<std::string, std::size_t> atom_index;
    std::vector<PolicyPtr> atoms;
    std::vector<long long> counts;

    const double loop_t0 = timings ? now_seconds() : 0.0;
    double lambda = 0.0;
    for (long long k = 0; k < params.K; ++k) {
        const double iter_t0 = timings ? now_seconds() : 0.0;
        const Eigen::MatrixXd box = m.r + lambda * m.c;
        PolicyPtr pi = solver.solve(box, buffer_ptr);
        const double vc_hat = evaluator.evaluate(*pi, m.c, buffer_ptr);

        TraceRow row;
        row.k = k;
        row.lambda = lambda;
        row.vc_hat_rho = vc_hat;
        if (timings) row.elapsed_ms = (now_seconds() - iter_t0) * 1e3;
        report.trace.push_back(row);

        const Eigen::MatrixXd table =
            materialize(*pi, m.num_states, m.num_actions, features);
        const auto [it, inserted] =
            atom_index.emplace(table_key(table), atoms.size());
        if (inserted) {
            atoms.push_back(std::move(pi));
            counts.push_back(1);
        } else {
            ++counts[it->second];
        }

        lambda = std::clamp(lambda - params.eta * (vc_hat - params.b_prime),
                            0.0, params.U);
    }
    if (timings) report.loop_seconds = now_seconds() - loop_t0;

    std::vector<double> weights(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i)
        weights[i] = static_cast<double>(counts[i]) /
                     static_cast<double>(params.K);
    report.mixture = Policy::mixture(std::move(atoms), std::move(weights));
    report.distinct_policies = static_cast<long long>(counts.size());

    // Exact audit against the true constrained optimum.
    const VerifyResult audit = verify_policy(m, *report.mixture, params.mode,
                                             params.epsilon, features);
    report.value_r = audit.value_r;
    report.value_c = audit.value_c;
    report.opt_value_r = audit.opt_value_r;
    report.feasible_ok = audit.feasible_ok;
    report.optimal_ok = audit.optimal_ok;
    report.verdict_pass = audit.verdict_pass;

    const bool scheduled = !params.k_overridden &&
                           params.constants.c_M == 1.0 &&
                           params.constants.c_T == 1.0;
    report.guarantee_status = scheduled ? "certified" : "empirical only";
    if (buffer_out != nullptr) *buffer_out = std::move(buffer);
    return report;
}

double dual_regret(const std::vector<TraceRow>& trace, double b_prime,
                   double lambda) {
    double acc = 0.0;
    for (const TraceRow& row : trace)
        acc += (row.lambda - lambda) * (row.vc_hat_rho - b_prime);
    return acc;
}

double dual_regret_max(const std::vector<TraceRow>& trace,
                       const FrameworkParams& params) {
    return std::max(dual_regret(trace, params.b_prime, 0.0),
                    dual_regret(trace, params.b_prime, params.U));
}

double dual_regret_limit(const FrameworkParams& params) {
    return params.U * std::sqrt(static_cast<double>(params.K)) /
           (1.0 - params.gamma);
}

ScalingResult scaling_experiment(const TabularCmdp& m, const Policy& pi,
                                 int T, const std::vector<int>& n_grid,
                                 int repetitions, std::uint64_t master_seed,
                                 const FeatureMap* features,
                                 const Design* design) {
    require_valid(m);
    if (T < 1)
        throw ParameterError("scaling_experiment: T must be >= 1");
    if (n_grid.size() < 2)
        throw ParameterError(
            "scaling_experiment: need at least two batch sizes to fit a "
            "slope");
    for (const int n : n_grid)
        if (n < 1)
            throw ParameterError(
                "scaling_experiment: batch sizes must be >= 1");
    if (repetitions < 1)
        throw ParameterError("scaling_experiment: repetitions must be >= 1");
    if ((features == nullptr) != (design == nullptr))
        throw ParameterError(
            "scaling_experiment: features and design go together");
    const bool linear = features != nullptr;

    ScalingResult out;

    // Reference: the estimator's infinite-batch value at this T — the
    // same averaged evaluation recursion driven by true expectations.
    // Measured deviations are then pure sampling error, which is what a
    // 1/sqrt(n) concentration study is about; against the policy's true
    // value the fixed finite-T bias would floor the curve instead.  (On
    // linearly realizable instances the least-squares fit interpolates
    // its targets exactly, so the limit is the same recursion.)
    {
        const Eigen::MatrixXd pi_table =
            materialize(pi, m.num_states, m.num_actions, features);
        Eigen::MatrixXd p_pi =
            Eigen::MatrixXd::Zero(m.num_states, m.num_states);
        Eigen::VectorXd d_pi = Eigen::VectorXd::Zero(m.num_states);
        for (int s = 0; s < m.num_states; ++s)
            for (int a = 0; a < m.num_actions; ++a) {
                p_pi.row(s) += pi_table(s, a) * m.P.row(m.pair_id(s, a));
                d_pi(s) += pi_table(s, a) * m.c(s, a);
            }
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m.num_states);
        double acc = 0.0;
        for (int t = 1; t <= T; ++t) {
            v = d_pi + m.gamma * (p_pi * v).eval();
            acc += m.rho.dot(v);
        }
        out.exact_value = acc / static_cast<double>(T);
    }

    std::vector<std::pair<int, int>> coreset;
    if (linear) {
        coreset = design->coreset;
    } else {
        coreset.reserve(static_cast<std::size_t>(m.pair_count()));
        for (int s = 0; s < m.num_states; ++s)
            for (int a = 0; a < m.num_actions; ++a)
                coreset.emplace_back(s, a);
    }
    const TabularGenerativeModel model(m);

    out.points.reserve(n_grid.size());
    for (const int n : n_grid) {
        double err_sum = 0.0;
        for (int rep = 0; rep < repetitions; ++rep) {
            const std::uint64_t run_seed = mix64(
                mix64(master_seed ^ static_cast<std::uint64_t>(n)) +
                static_cast<std::uint64_t>(rep));
            const Buffer buffer =
                data_collection(model, coreset, T, n, run_seed);
            const double est =
                linear ? ls_pe(T, n, m.gamma, m.c, buffer, pi, *design,
                               *features, m.rho)
                             .v_bar_rho
                       : tabular_pe(T, n, m.gamma, m.c, buffer, pi, m.rho)
                             .v_bar_rho;
            err_sum += std::abs(est - out.exact_value);
        }
        ScalingPoint point;
        point.n = n;
        point.mean_abs_error = err_sum / repetitions;
        out.points.push_back(point);
    }

    // Least-squares slope of log(error) against log(n).
    const auto safe_log = [](double v) {
        return std::log(std::max(v, 1e-300));
    };
    double x_mean = 0.0, y_mean = 0.0;
    for (const ScalingPoint& p : out.points) {
        x_mean += std::log(static_cast<double>(p.n));
        y_mean += safe_log(p.mean_abs_error);
    }
    x_mean /= static_cast<double>(out.points.size());
    y_mean /= static_cast<double>(out.points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const ScalingPoint& p : out.points) {
        const double dx = std::log(static_cast<double>(p.n)) - x_mean;
        sxy += dx * (safe_log(p.mean_abs_error) - y_mean);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0))
        throw ParameterError(
            "scaling_experiment: batch sizes must not all be equal");
    out.slope = sxy / sxx;
    return out;
}

} // namespace cmdplab
