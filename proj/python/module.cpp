// Python bindings for the toolkit's main operations: instance
// generation, exact ground-truth oracles, G-optimal design, parameter
// schedules, the primal-dual solver, and the estimator-scaling study.
//
// Conventions at the boundary:
//   - matrices and vectors cross as NumPy arrays (copied, never aliased);
//   - policies cross as S x A stochastic tables, mixtures as the policy
//     JSON text the CLI reads and writes;
//   - enums cross as the same strings the CLI uses ("relaxed"/"strict",
//     "reward"/"constraint").

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/design.hpp"
#include "cmdplab/generators.hpp"
#include "cmdplab/oracle.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/primal_dual.hpp"
#include "cmdplab/report_io.hpp"
#include "cmdplab/rng.hpp"
#include "cmdplab/sampling.hpp"

namespace py = pybind11;
using namespace cmdplab;

namespace {

ValueKind value_kind_from_string(const std::string& s) {
    if (s == "reward") return ValueKind::Reward;
    if (s == "constraint") return ValueKind::Constraint;
    throw ParameterError("value kind must be 'reward' or 'constraint', got '" +
                         s + "'");
}

py::dict params_to_dict(const FrameworkParams& p) {
    py::dict d;
    d["mode"] = to_string(p.mode);
    d["pipeline"] = to_string(p.pipeline);
    d["epsilon"] = p.epsilon;
    d["delta"] = p.delta;
    d["gamma"] = p.gamma;
    d["zeta"] = p.zeta;
    d["b"] = p.b;
    d["f"] = p.f;
    d["b_prime"] = p.b_prime;
    d["U"] = p.U;
    d["eta"] = p.eta;
    d["K"] = p.K;
    d["T"] = p.T;
    d["M"] = p.M;
    d["iota"] = p.iota;
    d["k_schedule"] = p.k_schedule;
    d["k_overridden"] = p.k_overridden;
    return d;
}

py::dict report_to_dict(const RunReport& r) {
    py::dict d;
    d["params"] = params_to_dict(r.params);
    d["solver"] = r.solver_name;
    d["evaluator"] = r.evaluator_name;
    d["master_seed"] = r.master_seed;
    d["distinct_policies"] = r.distinct_policies;
    d["guarantee_status"] = r.guarantee_status;
    d["value_r"] = r.value_r;
    d["value_c"] = r.value_c;
    d["opt_value_r"] = r.opt_value_r;
    d["feasible_ok"] = r.feasible_ok;
    d["optimal_ok"] = r.optimal_ok;
    d["verdict_pass"] = r.verdict_pass;
    d["dual_regret_max"] = dual_regret_max(r.trace, r.params);
    d["dual_regret_limit"] = dual_regret_limit(r.params);
    d["mixture_json"] = policy_to_json_string(*r.mixture);
    py::list trace;
    for (const TraceRow& row : r.trace)
        trace.append(py::make_tuple(row.k, row.lambda, row.vc_hat_rho));
    d["trace"] = std::move(trace);
    return d;
}

FrameworkParams build_params(const TabularCmdp& m, const std::string& mode,
                             double epsilon, double delta,
                             std::optional<double> zeta, double c_M,
                             double c_T, std::optional<long long> k_override,
                             std::string* zeta_source) {
    double z;
    if (zeta.has_value()) {
        z = *zeta;
        *zeta_source = "config";
    } else {
        z = slater_constant(m).zeta;
        *zeta_source = "computed";
    }
    FrameworkParams params = derive_params(
        feasibility_mode_from_string(mode), Pipeline::Tabular, epsilon,
        delta, m.gamma, z, m.b, m.num_states, m.num_actions, 0,
        ScheduleConstants{c_M, c_T});
    if (k_override.has_value()) apply_k_override(params, *k_override);
    return params;
}

} // namespace

PYBIND11_MODULE(_cmdplab, mod) {
    mod.doc() =
        "Solver toolkit for discounted constrained MDPs with "
        "generative-model sampling: primal-dual runs, exact oracles, "
        "G-optimal designs, and parameter schedules.";

    py::register_exception<ParameterError>(mod, "ParameterError",
                                           PyExc_ValueError);
    py::register_exception<ValidationError>(mod, "ValidationError",
                                            PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError",
                                           PyExc_RuntimeError);

    py::class_<TabularCmdp>(mod, "TabularCmdp")
        .def(py::init<>())
        .def_readwrite("num_states", &TabularCmdp::num_states)
        .def_readwrite("num_actions", &TabularCmdp::num_actions)
        .def_readwrite("gamma", &TabularCmdp::gamma)
        .def_readwrite("b", &TabularCmdp::b)
        .def_readwrite("rho", &TabularCmdp::rho)
        .def_readwrite("r", &TabularCmdp::r)
        .def_readwrite("c", &TabularCmdp::c)
        .def_readwrite("P", &TabularCmdp::P)
        .def("pair_count", &TabularCmdp::pair_count)
        .def("horizon", &TabularCmdp::horizon)
        .def("validate",
             [](const TabularCmdp& m) { return validate(m); },
             "List of invariant violations; empty means valid.")
        .def("to_json",
             [](const TabularCmdp& m) { return to_json_string(m); })
        .def_static("from_json", [](const std::string& text) {
            return tabular_cmdp_from_json(text);
        });

    py::class_<FeatureMap>(mod, "FeatureMap")
        .def(py::init<>())
        .def_readwrite("num_states", &FeatureMap::num_states)
        .def_readwrite("num_actions", &FeatureMap::num_actions)
        .def_readwrite("dim", &FeatureMap::dim)
        .def_readwrite("phi", &FeatureMap::phi)
        .def_static("one_hot", &FeatureMap::one_hot, py::arg("num_states"),
                    py::arg("num_actions"));

    py::class_<LinearCmdp>(mod, "LinearCmdp")
        .def_readwrite("tab", &LinearCmdp::tab)
        .def_readwrite("features", &LinearCmdp::features)
        .def_readwrite("psi_r", &LinearCmdp::psi_r)
        .def_readwrite("psi_c", &LinearCmdp::psi_c)
        .def_readwrite("anchors", &LinearCmdp::anchors)
        .def("to_json",
             [](const LinearCmdp& m) { return to_json_string(m); });

    // ---------------------------------------------------------- generators
    mod.def("random_tabular_cmdp", &random_tabular_cmdp, py::arg("seed"),
            py::arg("num_states"), py::arg("num_actions"), py::arg("gamma"),
            py::arg("slater_min"),
            "Random dense instance whose Slater margin is slater_min * H.");
    mod.def("random_feature_map", &random_feature_map, py::arg("seed"),
            py::arg("num_states"), py::arg("num_actions"), py::arg("dim"),
            "Random full-rank feature map with simplex rows.");
    mod.def("anchor_linear_cmdp", &anchor_linear_cmdp, py::arg("seed"),
            py::arg("num_states"), py::arg("num_actions"), py::arg("dim"),
            py::arg("gamma"), py::arg("slater_min"),
            "Random linearly realizable instance (anchor mixtures).");

    // ------------------------------------------------------- exact oracles
    mod.def(
        "exact_policy_value",
        [](const TabularCmdp& m, const Eigen::MatrixXd& pi_table,
           const std::string& kind) {
            const Eigen::MatrixXd& u =
                value_kind_from_string(kind) == ValueKind::Reward ? m.r
                                                                  : m.c;
            const PolicyValue pv = exact_policy_value_table(m, pi_table, u);
            py::dict d;
            d["v"] = pv.v;
            d["v_rho"] = pv.v_rho;
            return d;
        },
        py::arg("m"), py::arg("policy_table"), py::arg("kind"),
        "Exact discounted value of a stochastic policy table.");
    mod.def(
        "exact_mdp_optimum",
        [](const TabularCmdp& m, const Eigen::MatrixXd& u, double tol) {
            const MdpOptimum opt = exact_mdp_optimum(m, u, tol);
            py::dict d;
            d["v_star"] = opt.v_star;
            d["v_rho"] = opt.v_rho;
            d["iterations"] = opt.iterations;
            return d;
        },
        py::arg("m"), py::arg("u"), py::arg("tol") = 1e-9,
        "Unconstrained optimum of payoff table u by value iteration.");
    mod.def(
        "exact_cmdp_solve",
        [](const TabularCmdp& m) {
            const OccupancySolution sol = exact_cmdp_solve(m);
            py::dict d;
            d["feasible"] = sol.feasible;
            d["value_r"] = sol.value_r;
            d["value_c"] = sol.value_c;
            d["occupancy"] = sol.occupancy;
            if (sol.policy)
                d["policy_table"] = materialize(*sol.policy, m.num_states,
                                                m.num_actions, nullptr);
            return d;
        },
        py::arg("m"),
        "Exact constrained optimum via the occupancy-measure LP.");
    mod.def(
        "slater_constant",
        [](const TabularCmdp& m) {
            const SlaterInfo info = slater_constant(m);
            py::dict d;
            d["zeta"] = info.zeta;
            d["degenerate"] = info.degenerate;
            return d;
        },
        py::arg("m"), "Feasibility margin max_pi V_c - b.");
    mod.def(
        "mixture_value",
        [](const TabularCmdp& m, const std::string& policy_json,
           const std::string& kind) {
            const PolicyPtr pi = policy_from_json(policy_json);
            return mixture_value(m, *pi, value_kind_from_string(kind));
        },
        py::arg("m"), py::arg("policy_json"), py::arg("kind"),
        "Exact value of a saved policy (mixtures included).");

    // --------------------------------------------------------------- design
    mod.def(
        "frank_wolfe_design",
        [](const FeatureMap& features, double eps_fw) {
            const Design design = frank_wolfe(features, eps_fw);
            py::dict d;
            d["coreset"] = design.coreset;
            std::vector<double> w(design.weights.data(),
                                  design.weights.data() + design.size());
            d["weights"] = std::move(w);
            d["g_value"] = design.g_value;
            d["size"] = design.size();
            return d;
        },
        py::arg("features"), py::arg("eps_fw") = 0.5,
        "Near-G-optimal design over the feature rows (Frank-Wolfe).");

    // ------------------------------------------------------------ schedules
    mod.def(
        "derive_params",
        [](const std::string& mode, const std::string& pipeline,
           double epsilon, double delta, double gamma, double zeta, double b,
           int num_states, int num_actions, int dim, double c_M,
           double c_T) {
            return params_to_dict(derive_params(
                feasibility_mode_from_string(mode),
                pipeline_from_string(pipeline), epsilon, delta, gamma, zeta,
                b, num_states, num_actions, dim,
                ScheduleConstants{c_M, c_T}));
        },
        py::arg("mode"), py::arg("pipeline"), py::arg("epsilon"),
        py::arg("delta"), py::arg("gamma"), py::arg("zeta"), py::arg("b"),
        py::arg("num_states"), py::arg("num_actions"), py::arg("dim") = 0,
        py::arg("c_M") = 1.0, py::arg("c_T") = 1.0,
        "All derived run parameters (f, b', U, eta, K, T, M, iota).");

    // ----------------------------------------------------------- full solve
    mod.def(
        "solve",
        [](const TabularCmdp& m, const std::string& mode, double epsilon,
           double delta, std::uint64_t seed, std::optional<double> zeta,
           double c_M, double c_T, std::optional<long long> k_override,
           bool exact_oracles) {
            std::string zeta_source;
            const FrameworkParams params =
                build_params(m, mode, epsilon, delta, zeta, c_M, c_T,
                             k_override, &zeta_source);
            std::vector<std::pair<int, int>> coreset;
            for (int s = 0; s < m.num_states; ++s)
                for (int a = 0; a < m.num_actions; ++a)
                    coreset.emplace_back(s, a);
            RunReport report;
            if (exact_oracles) {
                ExactMdpSolver solver(m);
                ExactPeEvaluator evaluator(m);
                report =
                    cmdp_solve(m, params, solver, evaluator, coreset, seed);
            } else {
                TabularMdviSolver solver(params.T, params.M, m.gamma);
                TabularPeEvaluator evaluator(params.T, params.M, m.gamma,
                                             m.rho);
                report =
                    cmdp_solve(m, params, solver, evaluator, coreset, seed);
            }
            report.zeta_source = zeta_source;
            py::dict d = report_to_dict(report);
            d["zeta_source"] = zeta_source;
            return d;
        },
        py::arg("m"), py::arg("mode"), py::arg("epsilon"), py::arg("delta"),
        py::arg("seed") = 0, py::arg("zeta") = std::nullopt,
        py::arg("c_M") = 1.0, py::arg("c_T") = 1.0,
        py::arg("k_override") = std::nullopt,
        py::arg("exact_oracles") = false,
        "Full tabular primal-dual run; returns the report as a dict.");

    mod.def(
        "verify",
        [](const TabularCmdp& m, const std::string& policy_json,
           const std::string& mode, double epsilon) {
            const PolicyPtr pi = policy_from_json(policy_json);
            const VerifyResult v = verify_policy(
                m, *pi, feasibility_mode_from_string(mode), epsilon);
            py::dict d;
            d["value_r"] = v.value_r;
            d["value_c"] = v.value_c;
            d["opt_value_r"] = v.opt_value_r;
            d["feasible_ok"] = v.feasible_ok;
            d["optimal_ok"] = v.optimal_ok;
            d["verdict_pass"] = v.verdict_pass;
            return d;
        },
        py::arg("m"), py::arg("policy_json"), py::arg("mode"),
        py::arg("epsilon"),
        "Exact audit of a saved policy under a feasibility mode.");

    // -------------------------------------------------------------- scaling
    mod.def(
        "scaling_experiment",
        [](const TabularCmdp& m, const Eigen::MatrixXd& pi_table, int T,
           const std::vector<int>& grid, int reps, std::uint64_t seed) {
            const PolicyPtr pi = Policy::stochastic(pi_table);
            const ScalingResult res =
                scaling_experiment(m, *pi, T, grid, reps, seed);
            py::dict d;
            d["slope"] = res.slope;
            d["exact_value"] = res.exact_value;
            py::list points;
            for (const ScalingPoint& p : res.points)
                points.append(py::make_tuple(p.n, p.mean_abs_error));
            d["points"] = std::move(points);
            return d;
        },
        py::arg("m"), py::arg("policy_table"), py::arg("T"), py::arg("grid"),
        py::arg("reps"), py::arg("seed") = 0,
        "Policy-evaluation error versus batch size; returns the fitted "
        "log-log slope.");
}
