// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "cmdplab/simplex_lp.hpp"

namespace cmdplab {

namespace {

void check_payoff(const TabularCmdp& m, const Eigen::MatrixXd& u) {
    if (u.rows() != m.num_states || u.cols() != m.num_actions)
        throw ParameterError("payoff table has wrong shape");
    if (!u.allFinite())
        throw ParameterError("payoff table has non-finite entries");
}

Eigen::MatrixXd payoff_for(const TabularCmdp& m, ValueKind which) {
    return which == ValueKind::Reward ? m.r : m.c;
}

/// Row-stochastic S x S transition matrix induced by a policy table.
Eigen::MatrixXd induced_transition(const TabularCmdp& m,
                                   const Eigen::MatrixXd& pi_table) {
    Eigen::MatrixXd P_pi = Eigen::MatrixXd::Zero(m.num_states, m.num_states);
    for (int s = 0; s < m.num_states; ++s)
        for (int a = 0; a < m.num_actions; ++a) {
            const double w = pi_table(s, a);
            if (w != 0.0) P_pi.row(s) += w * m.P.row(m.pair_id(s, a));
        }
    return P_pi;
}

Eigen::MatrixXd materialize_non_mixture(const Policy& pi,
                                        const TabularCmdp& m,
                                        const FeatureMap* features) {
    if (pi.kind == PolicyKind::Mixture)
        throw ParameterError("mixture policies are evaluated by "
                             "mixture_value, not exact_policy_value");
    return materialize(pi, m.num_states, m.num_actions, features);
}

} // namespace

PolicyValue exact_policy_value_table(const TabularCmdp& m,
                                     const Eigen::MatrixXd& pi_table,
                                     const Eigen::MatrixXd& u) {
    check_payoff(m, u);
    auto bad = validate_policy_table(pi_table, m.num_states, m.num_actions);
    if (!bad.empty()) throw ValidationError("bad policy table: " + bad[0]);

    const int S = m.num_states;
    Eigen::VectorXd u_pi(S);
    for (int s = 0; s < S; ++s) u_pi(s) = pi_table.row(s).dot(u.row(s));

    const Eigen::MatrixXd P_pi = induced_transition(m, pi_table);
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(S, S) - m.gamma * P_pi;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    PolicyValue out;
    out.v = lu.solve(u_pi);

    const double resid = (A * out.v - u_pi).cwiseAbs().maxCoeff();
    const double scale = 1.0 + out.v.cwiseAbs().maxCoeff();
    if (!(resid <= 1e-9 * scale))
        throw NumericalError("policy evaluation solve residual " +
                             std::to_string(resid) + " exceeds tolerance");
    out.v_rho = m.rho.dot(out.v);
    return out;
}

PolicyValue exact_policy_value(const TabularCmdp& m, const Policy& pi,
                               const Eigen::MatrixXd& u,
                               const FeatureMap* features) {
    return exact_policy_value_table(m, materialize_non_mixture(pi, m,
                                                               features),
                                    u);
}

PolicyValue exact_policy_value(const TabularCmdp& m, const Policy& pi,
                               ValueKind which, const FeatureMap* features) {
    return exact_policy_value(m, pi, payoff_for(m, which), features);
}

MdpOptimum exact_mdp_optimum(const TabularCmdp& m, const Eigen::MatrixXd& u,
                             double tol) {
    check_payoff(m, u);
    if (!(tol > 0.0)) throw ParameterError("tol must be positive");

    const int S = m.num_states, A = m.num_actions;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd v_next(S);
    Eigen::MatrixXd q(S, A);
    // With gamma = 0 one backup is already exact.
    const double stop =
        m.gamma > 0.0 ? tol * (1.0 - m.gamma) / (2.0 * m.gamma)
                      : std::numeric_limits<double>::infinity();
    // Generous cap: the error contracts by gamma per sweep from at most
    // max|u| * H, so convergence needs ~ log(range/stop)/log(1/gamma).
    const long max_sweeps =
        m.gamma > 0.0
            ? 64 + static_cast<long>(
                       std::ceil(std::log(std::max(
                                     (1.0 + u.cwiseAbs().maxCoeff()) *
                                         m.horizon() / stop,
                                     2.0)) /
                                 -std::log(m.gamma)))
            : 2;

    MdpOptimum out;
    for (long sweep = 0;; ++sweep) {
        if (sweep > max_sweeps)
            throw NumericalError("value iteration failed to converge "
                                 "within its sweep cap");
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                q(s, a) = u(s, a) + m.gamma * m.P.row(m.pair_id(s, a)).dot(v);
        for (int s = 0; s < S; ++s) v_next(s) = q.row(s).maxCoeff();
        const double step = (v_next - v).cwiseAbs().maxCoeff();
        v = v_next;
        ++out.iterations;
        if (step <= stop) break;
    }

    std::vector<int> actions(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        actions[static_cast<std::size_t>(s)] = argmax_lowest(q.row(s));
    out.v_star = v;
    out.v_rho = m.rho.dot(v);
    out.policy = Policy::deterministic(std::move(actions));
    return out;
}

SlaterInfo slater_constant(const TabularCmdp& m, double tol) {
    const MdpOptimum best_c = exact_mdp_optimum(m, m.c, tol);
    SlaterInfo info;
    info.zeta = best_c.v_rho - m.b;
    info.degenerate = !(info.zeta > 0.0);
    return info;
}

double dual_bound(const TabularCmdp& m, double zeta) {
    if (!(zeta > 0.0))
        throw ParameterError("dual bound requires a positive feasibility "
                             "margin zeta");
    return 1.0 / ((1.0 - m.gamma) * zeta);
}

OccupancySolution exact_cmdp_solve(const TabularCmdp& m) {
    const int S = m.num_states, A = m.num_actions;
    const int n_mu = S * A;
    // Columns: mu(s,a) for each pair, then one surplus variable for the
    // constraint-value row  sum mu c - surplus = b.
    const int n = n_mu + 1;
    const int rows = S + 1;

    Eigen::MatrixXd lp_A = Eigen::MatrixXd::Zero(rows, n);
    Eigen::VectorXd lp_b(rows);
    Eigen::VectorXd lp_c = Eigen::VectorXd::Zero(n);

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) lp_A(s, m.pair_id(s, a)) += 1.0;
        for (int sp = 0; sp < S; ++sp)
            for (int ap = 0; ap < A; ++ap)
                lp_A(s, m.pair_id(sp, ap)) -=
                    m.gamma * m.P(m.pair_id(sp, ap), s);
        lp_b(s) = m.rho(s);
    }
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            lp_A(S, m.pair_id(s, a)) = m.c(s, a);
            lp_c(m.pair_id(s, a)) = m.r(s, a);
        }
    lp_A(S, n_mu) = -1.0; // surplus: constraint value exceeds b by >= 0
    lp_b(S) = m.b;

    const LpSolution sol = simplex_solve(lp_A, lp_b, lp_c);
    OccupancySolution out;
    if (sol.status == LpStatus::Unbounded)
        throw NumericalError("occupancy program reported unbounded; the "
                             "feasible set is compact, so this is a "
                             "numerical failure");
    if (sol.status == LpStatus::Infeasible) {
        out.feasible = false;
        return out;
    }

    out.feasible = true;
    out.occupancy.resize(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            out.occupancy(s, a) = sol.x(m.pair_id(s, a));
    out.value_r = 0.0;
    out.value_c = 0.0;
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            out.value_r += out.occupancy(s, a) * m.r(s, a);
            out.value_c += out.occupancy(s, a) * m.c(s, a);
        }

    // Audit flow conservation on the returned point.
    for (int s = 0; s < S; ++s) {
        double flow = -m.rho(s);
        for (int a = 0; a < A; ++a) flow += out.occupancy(s, a);
        for (int sp = 0; sp < S; ++sp)
            for (int ap = 0; ap < A; ++ap)
                flow -= m.gamma * m.P(m.pair_id(sp, ap), s) *
                        out.occupancy(sp, ap);
        if (std::abs(flow) > 1e-8)
            throw NumericalError("occupancy flow conservation violated at "
                                 "state " + std::to_string(s) +
                                 " (residual " + std::to_string(flow) + ")");
    }

    Eigen::MatrixXd pi_table(S, A);
    const double occ_floor = 1e-12 * m.horizon();
    for (int s = 0; s < S; ++s) {
        const double total = out.occupancy.row(s).sum();
        if (total > occ_floor) {
            for (int a = 0; a < A; ++a)
                pi_table(s, a) = std::max(out.occupancy(s, a), 0.0) / total;
            const double row_sum = pi_table.row(s).sum();
            pi_table.row(s) /= row_sum;
        } else {
            // Unvisited states never affect values; pick uniformly.
            pi_table.row(s).setConstant(1.0 / A);
        }
    }
    out.policy = Policy::stochastic(std::move(pi_table));
    return out;
}

std::string occupancy_to_json_string(const OccupancySolution& sol) {
    nlohmann::json j;
    j["feasible"] = sol.feasible;
    if (sol.feasible) {
        nlohmann::json occ = nlohmann::json::array();
        for (Eigen::Index s = 0; s < sol.occupancy.rows(); ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index a = 0; a < sol.occupancy.cols(); ++a)
                row.push_back(sol.occupancy(s, a));
            occ.push_back(std::move(row));
        }
        j["occupancy"] = std::move(occ);
        j["value_r"] = sol.value_r;
        j["value_c"] = sol.value_c;
        j["policy"] = nlohmann::json::parse(policy_to_json_string(
            *sol.policy));
    }
    return j.dump(2) + "\n";
}

double mixture_value(const TabularCmdp& m, const Policy& mix,
                     const Eigen::MatrixXd& u, const FeatureMap* features) {
    if (mix.kind != PolicyKind::Mixture)
        return exact_policy_value(m, mix, u, features).v_rho;
    if (mix.atoms.empty()) throw ParameterError("mixture has no components");

    // Group components by bitwise-equal materialized tables so long
    // mixtures of few distinct policies cost few solves.  Nested
    // mixtures recurse: value is linear in the mixing weights.
    std::vector<Eigen::MatrixXd> tables;
    std::vector<double> weights;
    double total = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < mix.atoms.size(); ++i) {
        const Policy& atom = *mix.atoms[i];
        const double w = mix.weights[i];
        total += w;
        if (atom.kind == PolicyKind::Mixture) {
            acc += w * mixture_value(m, atom, u, features);
            continue;
        }
        Eigen::MatrixXd t =
            materialize(atom, m.num_states, m.num_actions, features);
        bool found = false;
        for (std::size_t k = 0; k < tables.size(); ++k) {
            if ((tables[k].array() == t.array()).all()) {
                weights[k] += w;
                found = true;
                break;
            }
        }
        if (!found) {
            tables.push_back(std::move(t));
            weights.push_back(w);
        }
    }
    for (std::size_t k = 0; k < tables.size(); ++k)
        acc += weights[k] * exact_policy_value_table(m, tables[k], u).v_rho;
    return acc / total;
}

double mixture_value(const TabularCmdp& m, const Policy& mix, ValueKind which,
                     const FeatureMap* features) {
    return mixture_value(m, mix, payoff_for(m, which), features);
}

McEstimate mc_policy_value(const TabularCmdp& m, const Policy& pi,
                           const Eigen::MatrixXd& u, long num_rollouts,
                           RngStream& stream, const FeatureMap* features) {
    check_payoff(m, u);
    if (num_rollouts < 2)
        throw ParameterError("need at least 2 rollouts for a standard "
                             "error");
    if (pi.kind == PolicyKind::Mixture)
        throw ParameterError("Monte-Carlo evaluation of mixtures is not "
                             "supported; evaluate the components");
    const Eigen::MatrixXd table =
        materialize(pi, m.num_states, m.num_actions, features);

    const double u_max = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
    McEstimate est;
    // Truncate once the tail of the discounted sum is negligible.
    if (m.gamma == 0.0) {
        est.horizon = 1;
        est.truncation_bias_bound = 0.0;
    } else {
        const double target = 1e-4 * (1.0 - m.gamma) / u_max;
        est.horizon = static_cast<int>(
            std::ceil(std::log(std::min(target, 0.5)) / std::log(m.gamma)));
        est.truncation_bias_bound =
            std::pow(m.gamma, est.horizon) * u_max * m.horizon();
    }

    auto draw_index = [&stream](const auto& weights_row, int n) {
        const double x = stream.next_double();
        double cum = 0.0;
        int last_positive = 0;
        for (int i = 0; i < n; ++i) {
            const double p = weights_row(i);
            if (p > 0.0) last_positive = i;
            cum += p;
            if (x < cum) return i;
        }
        return last_positive;
    };

    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < num_rollouts; ++i) {
        int s = draw_index(m.rho, m.num_states);
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < est.horizon; ++t) {
            const int a = draw_index(table.row(s), m.num_actions);
            ret += disc * u(s, a);
            disc *= m.gamma;
            if (disc == 0.0) break;
            s = gen_sample(m, s, a, stream);
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    est.num_rollouts = num_rollouts;
    est.mean = sum / num_rollouts;
    const double var =
        std::max(0.0, (sum_sq - num_rollouts * est.mean * est.mean) /
                          (num_rollouts - 1));
    est.std_error = std::sqrt(var / num_rollouts);
    return est;
}

} // namespace cmdplab
