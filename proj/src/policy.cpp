// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/policy.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace cmdplab {

using nlohmann::json;

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    int best = 0;
    for (int j = 1; j < row.size(); ++j)
        if (row(j) > row(best)) best = j;
    return best;
}

PolicyPtr Policy::stochastic(Eigen::MatrixXd probs) {
    auto p = std::make_shared<Policy>();
    p->kind = PolicyKind::Stochastic;
    p->probs = std::move(probs);
    return p;
}

PolicyPtr Policy::deterministic(std::vector<int> actions) {
    auto p = std::make_shared<Policy>();
    p->kind = PolicyKind::Deterministic;
    p->actions = std::move(actions);
    return p;
}

PolicyPtr Policy::greedy_linear(Eigen::VectorXd theta) {
    auto p = std::make_shared<Policy>();
    p->kind = PolicyKind::GreedyLinear;
    p->theta = std::move(theta);
    return p;
}

PolicyPtr Policy::mixture(std::vector<PolicyPtr> atoms,
                          std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw ParameterError("mixture needs matching, nonempty atom and "
                             "weight lists");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ParameterError("mixture weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ParameterError("mixture weights must sum to 1");
    auto p = std::make_shared<Policy>();
    p->kind = PolicyKind::Mixture;
    p->atoms = std::move(atoms);
    p->weights = std::move(weights);
    return p;
}

PolicyPtr Policy::uniform_mixture(std::vector<PolicyPtr> atoms) {
    if (atoms.empty())
        throw ParameterError("uniform mixture needs at least one atom");
    std::vector<double> w(atoms.size(), 1.0 / atoms.size());
    // Guard against rounding: renormalize exactly.
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
    return mixture(std::move(atoms), std::move(w));
}

std::vector<std::string> validate_policy_table(const Eigen::MatrixXd& probs,
                                               int num_states,
                                               int num_actions) {
    std::vector<std::string> out;
    if (probs.rows() != num_states || probs.cols() != num_actions) {
        out.push_back("policy table has wrong shape");
        return out;
    }
    for (int s = 0; s < num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            if (probs(s, a) < 0.0) {
                out.push_back("policy row " + std::to_string(s) +
                              " has a negative entry");
                break;
            }
            sum += probs(s, a);
        }
        if (std::abs(sum - 1.0) > tol::policy_row) {
            out.push_back("policy row " + std::to_string(s) +
                          " does not sum to 1 (sum = " + std::to_string(sum) +
                          ")");
            break;
        }
    }
    return out;
}

Eigen::MatrixXd materialize(const Policy& pi, int num_states,
                            int num_actions, const FeatureMap* features) {
    switch (pi.kind) {
    case PolicyKind::Stochastic: {
        auto v = validate_policy_table(pi.probs, num_states, num_actions);
        if (!v.empty()) throw ValidationError("bad policy table: " + v[0]);
        return pi.probs;
    }
    case PolicyKind::Deterministic: {
        if (static_cast<int>(pi.actions.size()) != num_states)
            throw ValidationError("deterministic policy has wrong length");
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(num_states, num_actions);
        for (int s = 0; s < num_states; ++s) {
            const int a = pi.actions[s];
            if (a < 0 || a >= num_actions)
                throw ValidationError("deterministic policy action out of "
                                      "range at state " + std::to_string(s));
            t(s, a) = 1.0;
        }
        return t;
    }
    case PolicyKind::GreedyLinear: {
        if (features == nullptr)
            throw ParameterError("materializing a greedy-linear policy "
                                 "requires a feature map");
        if (features->dim != pi.theta.size())
            throw ParameterError("theta length does not match feature "
                                 "dimension");
        if (features->num_states != num_states ||
            features->num_actions != num_actions)
            throw ParameterError("feature map shape does not match model");
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(num_states, num_actions);
        Eigen::RowVectorXd scores(num_actions);
        for (int s = 0; s < num_states; ++s) {
            for (int a = 0; a < num_actions; ++a)
                scores(a) = features->row(s, a).dot(pi.theta);
            t(s, argmax_lowest(scores)) = 1.0;
        }
        return t;
    }
    case PolicyKind::Mixture: {
        std::vector<Eigen::MatrixXd> tables;
        std::vector<double> w;
        tables.reserve(pi.atoms.size());
        for (std::size_t i = 0; i < pi.atoms.size(); ++i) {
            Eigen::MatrixXd t =
                materialize(*pi.atoms[i], num_states, num_actions, features);
            // Merge bitwise-identical atoms so a mixture of copies of
            // one policy collapses to that policy exactly.
            bool merged = false;
            for (std::size_t k = 0; k < tables.size(); ++k) {
                if (tables[k].rows() == t.rows() &&
                    tables[k].cols() == t.cols() && (tables[k].array() ==
                     t.array()).all()) {
                    w[k] += pi.weights[i];
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                tables.push_back(std::move(t));
                w.push_back(pi.weights[i]);
            }
        }
        if (tables.size() == 1) return tables[0];
        Eigen::MatrixXd out =
            Eigen::MatrixXd::Zero(num_states, num_actions);
        for (std::size_t k = 0; k < tables.size(); ++k)
            out += w[k] * tables[k];
        return out;
    }
    }
    throw ParameterError("unknown policy kind");
}

// ------------------------------------------------------------------ JSON

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json policy_to_json_obj(const Policy& pi) {
    json j;
    switch (pi.kind) {
    case PolicyKind::Stochastic:
        j["kind"] = "stochastic";
        j["probs"] = matrix_to_json(pi.probs);
        break;
    case PolicyKind::Deterministic:
        j["kind"] = "deterministic";
        j["actions"] = pi.actions;
        break;
    case PolicyKind::GreedyLinear: {
        j["kind"] = "greedy_linear";
        json t = json::array();
        for (Eigen::Index i = 0; i < pi.theta.size(); ++i)
            t.push_back(pi.theta(i));
        j["theta"] = std::move(t);
        break;
    }
    case PolicyKind::Mixture: {
        j["kind"] = "mixture";
        j["weights"] = pi.weights;
        json atoms = json::array();
        for (const auto& a : pi.atoms) atoms.push_back(policy_to_json_obj(*a));
        j["atoms"] = std::move(atoms);
        break;
    }
    }
    return j;
}

PolicyPtr policy_from_json_obj(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "stochastic") {
        const auto& rows = j.at("probs");
        const auto R = static_cast<Eigen::Index>(rows.size());
        if (R == 0) throw ValidationError("policy probs is empty");
        const auto C = static_cast<Eigen::Index>(rows.at(0).size());
        Eigen::MatrixXd probs(R, C);
        for (Eigen::Index i = 0; i < R; ++i)
            for (Eigen::Index k = 0; k < C; ++k)
                probs(i, k) = rows.at(static_cast<std::size_t>(i))
                                  .at(static_cast<std::size_t>(k))
                                  .get<double>();
        return Policy::stochastic(std::move(probs));
    }
    if (kind == "deterministic")
        return Policy::deterministic(j.at("actions").get<std::vector<int>>());
    if (kind == "greedy_linear") {
        const auto& t = j.at("theta");
        Eigen::VectorXd theta(static_cast<Eigen::Index>(t.size()));
        for (Eigen::Index i = 0; i < theta.size(); ++i)
            theta(i) = t.at(static_cast<std::size_t>(i)).get<double>();
        return Policy::greedy_linear(std::move(theta));
    }
    if (kind == "mixture") {
        std::vector<PolicyPtr> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.push_back(policy_from_json_obj(a));
        return Policy::mixture(std::move(atoms),
                               j.at("weights").get<std::vector<double>>());
    }
    throw ValidationError("unknown policy kind: " + kind);
}

} // namespace

std::string policy_to_json_string(const Policy& pi) {
    return policy_to_json_obj(pi).dump(2) + "\n";
}

PolicyPtr policy_from_json(const std::string& text) {
    return policy_from_json_obj(json::parse(text));
}

void save_policy(const Policy& pi, const std::string& path) {
    write_text_file(path, policy_to_json_string(pi));
}

PolicyPtr load_policy(const std::string& path) {
    return policy_from_json(read_text_file(path));
}

} // namespace cmdplab
