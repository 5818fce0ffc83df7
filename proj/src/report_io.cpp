#include "cmdplab/report_io.hpp"

#include <cstdio>

#include <json.hpp>

namespace cmdplab {

namespace {

/// Shortest-round-trip decimal form of a double, for CSV cells.
std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string to_string(FeasibilityMode mode) {
    return mode == FeasibilityMode::Relaxed ? "relaxed" : "strict";
}

std::string to_string(Pipeline pipeline) {
    return pipeline == Pipeline::Tabular ? "tabular" : "linear";
}

FeasibilityMode feasibility_mode_from_string(const std::string& s) {
    if (s == "relaxed") return FeasibilityMode::Relaxed;
    if (s == "strict") return FeasibilityMode::Strict;
    throw ParameterError("unknown feasibility mode '" + s +
                         "' (expected 'relaxed' or 'strict')");
}

Pipeline pipeline_from_string(const std::string& s) {
    if (s == "tabular") return Pipeline::Tabular;
    if (s == "linear") return Pipeline::Linear;
    throw ParameterError("unknown pipeline '" + s +
                         "' (expected 'tabular' or 'linear')");
}

std::string run_report_to_json_string(const RunReport& report,
                                      const std::string& instance_path) {
    const FrameworkParams& p = report.params;
    nlohmann::json params{
        {"mode", to_string(p.mode)},
        {"pipeline", to_string(p.pipeline)},
        {"epsilon", p.epsilon},
        {"delta", p.delta},
        {"gamma", p.gamma},
        {"zeta", p.zeta},
        {"b", p.b},
        {"f", p.f},
        {"b_prime", p.b_prime},
        {"U", p.U},
        {"eta", p.eta},
        {"K", p.K},
        {"T", p.T},
        {"M", p.M},
        {"iota", p.iota},
        {"c_M", p.constants.c_M},
        {"c_T", p.constants.c_T},
        {"k_overridden", p.k_overridden},
        {"k_schedule", p.k_schedule},
    };
    nlohmann::json audit{
        {"value_r", report.value_r},
        {"value_c", report.value_c},
        {"opt_value_r", report.opt_value_r},
        {"feasible_ok", report.feasible_ok},
        {"optimal_ok", report.optimal_ok},
        {"verdict_pass", report.verdict_pass},
        {"dual_regret_max", dual_regret_max(report.trace, p)},
        {"dual_regret_limit", dual_regret_limit(p)},
    };
    nlohmann::json j{
        {"instance", instance_path},
        {"params", params},
        {"solver", report.solver_name},
        {"evaluator", report.evaluator_name},
        {"master_seed", report.master_seed},
        {"zeta_source",
         report.zeta_source.empty() ? "computed" : report.zeta_source},
        {"guarantee_status", report.guarantee_status},
        {"distinct_policies", report.distinct_policies},
        {"iterations_traced",
         static_cast<long long>(report.trace.size())},
        {"audit", audit},
        {"buffer_seconds", report.buffer_seconds},
        {"loop_seconds", report.loop_seconds},
        {"mixture",
         nlohmann::json::parse(policy_to_json_string(*report.mixture))},
    };
    return j.dump(2) + "\n";
}

std::string trace_to_csv_string(const std::vector<TraceRow>& trace) {
    std::string out = "k,lambda,vc_hat_rho,elapsed_ms\n";
    for (const TraceRow& row : trace) {
        out += std::to_string(row.k);
        out += ',';
        out += fmt_double(row.lambda);
        out += ',';
        out += fmt_double(row.vc_hat_rho);
        out += ',';
        out += fmt_double(row.elapsed_ms);
        out += '\n';
    }
    return out;
}

std::string diagnostics_to_csv_string(
    const std::vector<IterationDiag>& diag) {
    std::string out = "t,theta_l2,q_inf,max_residual\n";
    for (const IterationDiag& d : diag) {
        out += std::to_string(d.t);
        out += ',';
        out += fmt_double(d.theta_l2);
        out += ',';
        out += fmt_double(d.q_max_abs);
        out += ',';
        out += fmt_double(d.max_residual);
        out += '\n';
    }
    return out;
}

std::string scaling_to_csv_string(const ScalingResult& result) {
    std::string out = "n,error\n";
    for (const ScalingPoint& p : result.points) {
        out += std::to_string(p.n);
        out += ',';
        out += fmt_double(p.mean_abs_error);
        out += '\n';
    }
    return out;
}

} // namespace cmdplab
