#pragma once

#include <string>
#include <vector>

#include "cmdplab/primal_dual.hpp"
#include "cmdplab/solver_common.hpp"

namespace cmdplab {

std::string to_string(FeasibilityMode mode);
std::string to_string(Pipeline pipeline);
FeasibilityMode feasibility_mode_from_string(const std::string& s);
Pipeline pipeline_from_string(const std::string& s);

/// Full run report as JSON: parameters, verdicts, exact audit values,
/// the dual-regret audit, and the mixture policy itself.  The trace is
/// written separately as CSV.  `instance_path` records where the solved
/// instance lives ("" for in-memory instances).
std::string run_report_to_json_string(const RunReport& report,
                                      const std::string& instance_path);

/// CSV with header "k,lambda,vc_hat_rho,elapsed_ms"; doubles are
/// printed with %.17g so reading them back is lossless.
std::string trace_to_csv_string(const std::vector<TraceRow>& trace);

/// CSV with header "t,theta_l2,q_inf,max_residual": per-iteration
/// weight-vector norm, sup-norm of the fitted Q, and worst regression
/// residual on the coreset.
std::string diagnostics_to_csv_string(const std::vector<IterationDiag>& diag);

/// CSV with header "n,error": mean absolute estimation error per batch
/// size, for the estimator-scaling study.
std::string scaling_to_csv_string(const ScalingResult& result);

} // namespace cmdplab
