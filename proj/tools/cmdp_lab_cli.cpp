// Command-line front door for cmdp-lab: generate instances, build
// G-optimal designs, run the primal-dual solver end to end, evaluate
// and verify policies, and run the estimator-scaling study.
//
// Exit codes: 0 success (and verdict pass), 1 usage or malformed
// input, 2 verification/validation failure, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/design.hpp"
#include "cmdplab/generators.hpp"
#include "cmdplab/oracle.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/primal_dual.hpp"
#include "cmdplab/report_io.hpp"
#include "cmdplab/sampling.hpp"

namespace {

using namespace cmdplab;

struct Instance {
    TabularCmdp tab;
    std::optional<LinearCmdp> linear;
    const FeatureMap* features() const {
        return linear ? &linear->features : nullptr;
    }
};

Instance load_instance(const std::string& path) {
    const std::string text = read_text_file(path);
    Instance inst;
    if (is_linear_cmdp_file(text)) {
        inst.linear = linear_cmdp_from_json(text);
        inst.tab = inst.linear->tab;
    } else {
        inst.tab = tabular_cmdp_from_json(text);
    }
    return inst;
}

std::vector<std::pair<int, int>> full_coreset(const TabularCmdp& m) {
    std::vector<std::pair<int, int>> coreset;
    coreset.reserve(static_cast<std::size_t>(m.pair_count()));
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < m.num_actions; ++a) coreset.emplace_back(s, a);
    return coreset;
}

// ------------------------------------------------------------- generate

struct GenerateArgs {
    std::string kind = "tabular";
    std::uint64_t seed = 0;
    int num_states = 10;
    int num_actions = 3;
    int dim = 4;
    double gamma = 0.9;
    double slater_min = 0.1;
    std::string out;
};

int run_generate(const GenerateArgs& a) {
    if (a.kind == "tabular") {
        save_tabular_cmdp(random_tabular_cmdp(a.seed, a.num_states,
                                              a.num_actions, a.gamma,
                                              a.slater_min),
                          a.out);
    } else if (a.kind == "linear") {
        save_linear_cmdp(anchor_linear_cmdp(a.seed, a.num_states,
                                            a.num_actions, a.dim, a.gamma,
                                            a.slater_min),
                         a.out);
    } else {
        throw ParameterError("generate: unknown kind '" + a.kind +
                             "' (expected 'tabular' or 'linear')");
    }
    return 0;
}

// --------------------------------------------------------------- design

struct DesignArgs {
    std::string instance;
    double eps_fw = 0.5;
    std::string out;
};

int run_design(const DesignArgs& a) {
    const Instance inst = load_instance(a.instance);
    if (!inst.features())
        throw ParameterError(
            "design: instance '" + a.instance +
            "' has no feature map; the design subcommand needs a linear "
            "instance");
    const Design d = frank_wolfe(*inst.features(), a.eps_fw);
    write_text_file(a.out, design_to_json_string(d));
    return 0;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
    std::string config;
    std::uint64_t seed = 0;
    bool timings = false;
    std::string dump_buffer;
    long long k_override = 0; // 0 = not set on the command line
};

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ParameterError(std::string("config: missing field '") + name +
                             "'");
    return *it;
}

int run_solve(const SolveArgs& a) {
    const nlohmann::json cfg = nlohmann::json::parse(read_text_file(a.config));
    const std::string output_dir = field(cfg, "output_dir").get<std::string>();
    std::filesystem::create_directories(output_dir);
    const auto out_path = [&](const char* name) {
        return (std::filesystem::path(output_dir) / name).string();
    };

    // Instance: a path, or an inline generator spec (the generated
    // instance is saved next to the outputs so reports stay verifiable).
    Instance inst;
    std::string instance_path;
    if (cfg.contains("instance")) {
        instance_path = cfg.at("instance").get<std::string>();
        inst = load_instance(instance_path);
    } else if (cfg.contains("generator")) {
        const nlohmann::json& g = cfg.at("generator");
        GenerateArgs ga;
        ga.kind = field(g, "kind").get<std::string>();
        ga.seed = field(g, "seed").get<std::uint64_t>();
        ga.num_states = field(g, "num_states").get<int>();
        ga.num_actions = field(g, "num_actions").get<int>();
        if (g.contains("dim")) ga.dim = g.at("dim").get<int>();
        ga.gamma = field(g, "gamma").get<double>();
        ga.slater_min = field(g, "slater_min").get<double>();
        ga.out = out_path("instance.json");
        run_generate(ga);
        instance_path = ga.out;
        inst = load_instance(instance_path);
    } else {
        throw ParameterError(
            "config: need either field 'instance' (path) or 'generator' "
            "(inline spec)");
    }

    const FeasibilityMode mode =
        feasibility_mode_from_string(field(cfg, "mode").get<std::string>());
    const Pipeline pipeline =
        pipeline_from_string(field(cfg, "pipeline").get<std::string>());
    const double epsilon = field(cfg, "epsilon").get<double>();
    const double delta = field(cfg, "delta").get<double>();
    if (pipeline == Pipeline::Linear && !inst.features())
        throw ParameterError(
            "config: pipeline 'linear' needs a linear instance");

    ScheduleConstants constants;
    if (cfg.contains("constants")) {
        const nlohmann::json& c = cfg.at("constants");
        if (c.contains("c_M")) constants.c_M = c.at("c_M").get<double>();
        if (c.contains("c_T")) constants.c_T = c.at("c_T").get<double>();
    }

    std::string zeta_source = "computed";
    double zeta;
    if (cfg.contains("zeta")) {
        zeta = cfg.at("zeta").get<double>();
        zeta_source = "config";
    } else {
        const SlaterInfo info = slater_constant(inst.tab);
        if (info.degenerate)
            throw ValidationError(
                "instance has no strictly feasible policy (zeta <= 0); "
                "supply 'zeta' in the config to override");
        zeta = info.zeta;
    }

    const TabularCmdp& m = inst.tab;
    const int dim = inst.features() ? inst.features()->dim : 1;
    FrameworkParams params =
        derive_params(mode, pipeline, epsilon, delta, m.gamma, zeta, m.b,
                      m.num_states, m.num_actions, dim, constants);
    long long k_override = a.k_override;
    if (k_override == 0 && cfg.contains("k_override"))
        k_override = cfg.at("k_override").get<long long>();
    if (k_override != 0) apply_k_override(params, k_override);

    std::vector<std::pair<int, int>> coreset;
    std::unique_ptr<MdpSolverOracle> solver;
    std::unique_ptr<PolicyEvalOracle> evaluator;
    if (pipeline == Pipeline::Tabular) {
        coreset = full_coreset(m);
        solver = std::make_unique<TabularMdviSolver>(params.T, params.M,
                                                     m.gamma);
        evaluator = std::make_unique<TabularPeEvaluator>(params.T, params.M,
                                                         m.gamma, m.rho);
    } else {
        const double eps_fw =
            cfg.contains("eps_fw") ? cfg.at("eps_fw").get<double>() : 0.5;
        Design design = frank_wolfe(*inst.features(), eps_fw);
        write_text_file(out_path("design.json"),
                        design_to_json_string(design));
        coreset = design.coreset;
        solver = std::make_unique<LsMdviSolver>(
            params.T, params.M, m.gamma, design, *inst.features());
        evaluator = std::make_unique<LsPeEvaluator>(params.T, params.M,
                                                    m.gamma, std::move(design),
                                                    *inst.features(), m.rho);
    }

    Buffer buffer;
    RunReport report = cmdp_solve(
        m, params, *solver, *evaluator, coreset, a.seed, a.timings,
        inst.features(), a.dump_buffer.empty() ? nullptr : &buffer);
    report.zeta_source = zeta_source;

    write_text_file(out_path("report.json"),
                    run_report_to_json_string(report, instance_path));
    write_text_file(out_path("trace.csv"), trace_to_csv_string(report.trace));
    if (!a.dump_buffer.empty())
        write_text_file(a.dump_buffer, buffer_to_json_string(buffer));

    const nlohmann::json summary{
        {"feasible_ok", report.feasible_ok},
        {"optimal_ok", report.optimal_ok},
        {"verdict_pass", report.verdict_pass},
        {"value_r", report.value_r},
        {"value_c", report.value_c},
        {"opt_value_r", report.opt_value_r},
        {"guarantee_status", report.guarantee_status},
    };
    std::cout << summary.dump() << "\n";
    return report.feasible_ok ? 0 : 2;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string instance;
    std::string policy;
    std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
    const Instance inst = load_instance(a.instance);
    const PolicyPtr pi = load_policy(a.policy);
    double value_r, value_c;
    if (pi->kind == PolicyKind::Mixture) {
        value_r = mixture_value(inst.tab, *pi, ValueKind::Reward,
                                inst.features());
        value_c = mixture_value(inst.tab, *pi, ValueKind::Constraint,
                                inst.features());
    } else {
        value_r = exact_policy_value(inst.tab, *pi, ValueKind::Reward,
                                     inst.features())
                      .v_rho;
        value_c = exact_policy_value(inst.tab, *pi, ValueKind::Constraint,
                                     inst.features())
                      .v_rho;
    }
    const nlohmann::json j{{"value_r", value_r}, {"value_c", value_c}};
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!a.out.empty()) write_text_file(a.out, text);
    return 0;
}

// --------------------------------------------------------------- verify

struct VerifyArgs {
    std::string instance;
    std::string report;
};

int run_verify(const VerifyArgs& a) {
    const Instance inst = load_instance(a.instance);
    const nlohmann::json rj = nlohmann::json::parse(read_text_file(a.report));
    const nlohmann::json& params = field(rj, "params");
    const FeasibilityMode mode =
        feasibility_mode_from_string(field(params, "mode").get<std::string>());
    const double epsilon = field(params, "epsilon").get<double>();
    const PolicyPtr mixture = policy_from_json(field(rj, "mixture").dump());

    const VerifyResult v =
        verify_policy(inst.tab, *mixture, mode, epsilon, inst.features());
    const nlohmann::json j{
        {"value_r", v.value_r},       {"value_c", v.value_c},
        {"opt_value_r", v.opt_value_r}, {"feasible_ok", v.feasible_ok},
        {"optimal_ok", v.optimal_ok},   {"verdict_pass", v.verdict_pass},
    };
    std::cout << j.dump(2) << "\n";
    return v.verdict_pass ? 0 : 2;
}

// -------------------------------------------------------------- scaling

struct ScalingArgs {
    std::string instance;
    std::string policy;
    int t = 100;
    std::vector<int> grid = {50, 100, 200, 400, 800};
    int reps = 20;
    std::uint64_t seed = 0;
    std::string out;
};

int run_scaling(const ScalingArgs& a) {
    const Instance inst = load_instance(a.instance);
    PolicyPtr pi;
    if (a.policy.empty()) {
        pi = Policy::stochastic(Eigen::MatrixXd::Constant(
            inst.tab.num_states, inst.tab.num_actions,
            1.0 / inst.tab.num_actions));
    } else {
        pi = load_policy(a.policy);
    }

    ScalingResult result;
    if (inst.features()) {
        const Design design = frank_wolfe(*inst.features());
        result = scaling_experiment(inst.tab, *pi, a.t, a.grid, a.reps,
                                    a.seed, inst.features(), &design);
    } else {
        result = scaling_experiment(inst.tab, *pi, a.t, a.grid, a.reps,
                                    a.seed);
    }
    write_text_file(a.out, scaling_to_csv_string(result));
    const nlohmann::json j{{"slope", result.slope},
                           {"exact_value", result.exact_value}};
    std::cout << j.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cmdp-lab: solver toolkit for discounted constrained MDPs"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* gen_cmd =
        app.add_subcommand("generate", "Generate a random instance");
    gen_cmd->add_option("--kind", gen.kind, "tabular or linear");
    gen_cmd->add_option("--seed", gen.seed, "instance seed");
    gen_cmd->add_option("--num-states", gen.num_states, "number of states");
    gen_cmd->add_option("--num-actions", gen.num_actions,
                        "number of actions");
    gen_cmd->add_option("--dim", gen.dim, "feature dimension (linear)");
    gen_cmd->add_option("--gamma", gen.gamma, "discount factor");
    gen_cmd->add_option("--slater-min", gen.slater_min,
                        "target Slater slack per horizon");
    gen_cmd->add_option("--out", gen.out, "output instance path")
        ->required();

    DesignArgs des;
    CLI::App* des_cmd = app.add_subcommand(
        "design", "Build a G-optimal design for a linear instance");
    des_cmd->add_option("--instance", des.instance, "linear instance path")
        ->required();
    des_cmd->add_option("--eps-fw", des.eps_fw,
                        "Frank-Wolfe termination slack");
    des_cmd->add_option("--out", des.out, "output design path")->required();

    SolveArgs sol;
    CLI::App* sol_cmd = app.add_subcommand(
        "solve", "Run the primal-dual solver from a config file");
    sol_cmd->add_option("--config", sol.config, "config JSON path")
        ->required();
    sol_cmd->add_option("--seed", sol.seed, "master sampling seed");
    sol_cmd->add_flag("--timings", sol.timings,
                      "record wall-clock times in the outputs");
    sol_cmd->add_option("--dump-buffer", sol.dump_buffer,
                        "also write the collected sample buffer here");
    sol_cmd->add_option("--k-override", sol.k_override,
                        "override the dual iteration count");

    EvaluateArgs eva;
    CLI::App* eva_cmd = app.add_subcommand(
        "evaluate", "Exact oracle values of a saved policy");
    eva_cmd->add_option("--instance", eva.instance, "instance path")
        ->required();
    eva_cmd->add_option("--policy", eva.policy, "policy JSON path")
        ->required();
    eva_cmd->add_option("--out", eva.out, "also write the values here");

    VerifyArgs ver;
    CLI::App* ver_cmd = app.add_subcommand(
        "verify", "Re-check a run report's guarantees against an instance");
    ver_cmd->add_option("--instance", ver.instance, "instance path")
        ->required();
    ver_cmd->add_option("--report", ver.report, "report JSON path")
        ->required();

    ScalingArgs sca;
    CLI::App* sca_cmd = app.add_subcommand(
        "scaling", "Estimator error-scaling study over batch sizes");
    sca_cmd->add_option("--instance", sca.instance, "instance path")
        ->required();
    sca_cmd->add_option("--policy", sca.policy,
                        "policy JSON path (default: uniform)");
    sca_cmd->add_option("--t", sca.t, "inner iteration count");
    sca_cmd->add_option("--grid", sca.grid, "batch sizes")
        ->delimiter(',');
    sca_cmd->add_option("--reps", sca.reps, "repetitions per batch size");
    sca_cmd->add_option("--seed", sca.seed, "master sampling seed");
    sca_cmd->add_option("--out", sca.out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*gen_cmd) return run_generate(gen);
        if (*des_cmd) return run_design(des);
        if (*sol_cmd) return run_solve(sol);
        if (*eva_cmd) return run_evaluate(eva);
        if (*ver_cmd) return run_verify(ver);
        if (*sca_cmd) return run_scaling(sca);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
