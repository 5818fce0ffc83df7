// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/cmdp.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cmdplab {

using nlohmann::json;

FeatureMap FeatureMap::one_hot(int num_states, int num_actions) {
    FeatureMap f;
    f.num_states = num_states;
    f.num_actions = num_actions;
    f.dim = num_states * num_actions;
    f.phi = Eigen::MatrixXd::Identity(f.dim, f.dim);
    return f;
}

namespace {

void check_unit_interval(const Eigen::MatrixXd& m, const char* name,
                         std::vector<std::string>& out) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream msg;
                msg << name << "(" << i << "," << j << ") = " << v
                    << " outside [0, 1]";
                out.push_back(msg.str());
                return; // one violation per table is enough to act on
            }
        }
    }
}

} // namespace

std::vector<std::string> validate(const TabularCmdp& m) {
    std::vector<std::string> out;
    if (m.num_states <= 0 || m.num_actions <= 0) {
        out.push_back("num_states and num_actions must be positive");
        return out;
    }
    const int S = m.num_states, A = m.num_actions;
    if (!(m.gamma >= 0.0 && m.gamma < 1.0))
        out.push_back("gamma must lie in [0, 1)");
    if (m.rho.size() != S) out.push_back("rho has wrong length");
    if (m.r.rows() != S || m.r.cols() != A) out.push_back("r has wrong shape");
    if (m.c.rows() != S || m.c.cols() != A) out.push_back("c has wrong shape");
    if (m.P.rows() != static_cast<Eigen::Index>(S) * A || m.P.cols() != S)
        out.push_back("P has wrong shape");
    if (!out.empty()) return out;

    check_unit_interval(m.r, "r", out);
    check_unit_interval(m.c, "c", out);

    double rho_sum = 0.0;
    bool rho_neg = false;
    for (int s = 0; s < S; ++s) {
        if (m.rho(s) < 0.0) rho_neg = true;
        rho_sum += m.rho(s);
    }
    if (rho_neg) out.push_back("rho has a negative entry");
    if (std::abs(rho_sum - 1.0) > tol::row_stochastic)
        out.push_back("rho does not sum to 1 (sum = " +
                      std::to_string(rho_sum) + ")");

    for (int sa = 0; sa < S * A; ++sa) {
        double row_sum = 0.0;
        for (int t = 0; t < S; ++t) {
            const double p = m.P(sa, t);
            if (p < 0.0) {
                out.push_back("P row " + std::to_string(sa) +
                              " has a negative entry");
                break;
            }
            row_sum += p;
        }
        if (std::abs(row_sum - 1.0) > tol::row_stochastic) {
            out.push_back("P row " + std::to_string(sa) +
                          " is not stochastic (sum = " +
                          std::to_string(row_sum) + ")");
            break;
        }
    }

    if (m.gamma < 1.0 && !(m.b >= 0.0 && m.b < m.horizon()))
        out.push_back("b must lie in [0, 1/(1-gamma))");
    return out;
}

std::vector<std::string> validate(const FeatureMap& f) {
    std::vector<std::string> out;
    if (f.num_states <= 0 || f.num_actions <= 0 || f.dim <= 0) {
        out.push_back("feature map dimensions must be positive");
        return out;
    }
    if (f.dim > f.pair_count())
        out.push_back("feature dimension exceeds the number of pairs");
    if (f.phi.rows() != f.pair_count() || f.phi.cols() != f.dim) {
        out.push_back("phi has wrong shape");
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.phi);
    const auto& sv = svd.singularValues();
    if (sv.size() < f.dim || sv(f.dim - 1) <= tol::feature_rank)
        out.push_back("phi is rank-deficient (smallest singular value " +
                      std::to_string(sv.size() ? sv(sv.size() - 1) : 0.0) +
                      ")");
    return out;
}

std::vector<std::string> validate(const LinearCmdp& m) {
    std::vector<std::string> out = validate(m.tab);
    auto feat = validate(m.features);
    out.insert(out.end(), feat.begin(), feat.end());
    if (m.features.num_states != m.tab.num_states ||
        m.features.num_actions != m.tab.num_actions) {
        out.push_back("feature map and model disagree on S or A");
        return out;
    }
    const int d = m.features.dim;
    if (m.psi_r.size() != d || m.psi_c.size() != d)
        out.push_back("psi_r / psi_c have wrong length");
    if (m.anchors.rows() != d || m.anchors.cols() != m.tab.num_states)
        out.push_back("anchors have wrong shape");
    if (!out.empty()) return out;

    const double r_resid =
        (m.tab.r.reshaped<Eigen::RowMajor>() - m.features.phi * m.psi_r)
            .cwiseAbs()
            .maxCoeff();
    if (r_resid > tol::reconstruction)
        out.push_back("r is not realized by <phi, psi_r> (residual " +
                      std::to_string(r_resid) + ")");
    const double c_resid =
        (m.tab.c.reshaped<Eigen::RowMajor>() - m.features.phi * m.psi_c)
            .cwiseAbs()
            .maxCoeff();
    if (c_resid > tol::reconstruction)
        out.push_back("c is not realized by <phi, psi_c> (residual " +
                      std::to_string(c_resid) + ")");
    const double p_resid =
        (m.tab.P - m.features.phi * m.anchors).cwiseAbs().maxCoeff();
    if (p_resid > tol::reconstruction)
        out.push_back("P is not realized by the anchor mixture (residual " +
                      std::to_string(p_resid) + ")");
    return out;
}

namespace {

[[noreturn]] void throw_violations(const std::vector<std::string>& v) {
    std::string msg = "validation failed:";
    for (const auto& s : v) msg += "\n  - " + s;
    throw ValidationError(msg);
}

} // namespace

void require_valid(const TabularCmdp& m) {
    auto v = validate(m);
    if (!v.empty()) throw_violations(v);
}
void require_valid(const FeatureMap& f) {
    auto v = validate(f);
    if (!v.empty()) throw_violations(v);
}
void require_valid(const LinearCmdp& m) {
    auto v = validate(m);
    if (!v.empty()) throw_violations(v);
}

int gen_sample(const TabularCmdp& m, int s, int a, RngStream& stream) {
    if (s < 0 || s >= m.num_states || a < 0 || a >= m.num_actions)
        throw ParameterError("gen_sample: pair (" + std::to_string(s) + ", " +
                             std::to_string(a) + ") out of range for " +
                             std::to_string(m.num_states) + " states, " +
                             std::to_string(m.num_actions) + " actions");
    const int sa = m.pair_id(s, a);
    const double u = stream.next_double();
    double cum = 0.0;
    int last_positive = 0;
    for (int t = 0; t < m.num_states; ++t) {
        const double p = m.P(sa, t);
        if (p > 0.0) last_positive = t;
        cum += p;
        if (u < cum) return t;
    }
    // u landed in the rounding gap above the accumulated row sum.
    return last_positive;
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

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty())
        throw ValidationError(std::string(name) + ": expected a 2-d array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw ValidationError(std::string(name) + ": ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k)
            m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j, const char* name) {
    if (!j.is_array())
        throw ValidationError(std::string(name) + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

// P is stored on disk as [s][a][s'] (natural reading order), flat
// (S*A) x S in memory.
json transitions_to_json(const TabularCmdp& m) {
    json per_state = json::array();
    for (int s = 0; s < m.num_states; ++s) {
        json per_action = json::array();
        for (int a = 0; a < m.num_actions; ++a) {
            json row = json::array();
            for (int t = 0; t < m.num_states; ++t)
                row.push_back(m.P(m.pair_id(s, a), t));
            per_action.push_back(std::move(row));
        }
        per_state.push_back(std::move(per_action));
    }
    return per_state;
}

json tabular_to_json(const TabularCmdp& m) {
    json j;
    j["num_states"] = m.num_states;
    j["num_actions"] = m.num_actions;
    j["gamma"] = m.gamma;
    j["b"] = m.b;
    j["rho"] = vector_to_json(m.rho);
    j["r"] = matrix_to_json(m.r);
    j["c"] = matrix_to_json(m.c);
    j["P"] = transitions_to_json(m);
    return j;
}

TabularCmdp tabular_from_json_obj(const json& j) {
    TabularCmdp m;
    m.num_states = j.at("num_states").get<int>();
    m.num_actions = j.at("num_actions").get<int>();
    m.gamma = j.at("gamma").get<double>();
    m.b = j.at("b").get<double>();
    m.rho = vector_from_json(j.at("rho"), "rho");
    m.r = matrix_from_json(j.at("r"), "r");
    m.c = matrix_from_json(j.at("c"), "c");
    const auto& P = j.at("P");
    if (static_cast<int>(P.size()) != m.num_states)
        throw ValidationError("P: expected one block per state");
    m.P.resize(static_cast<Eigen::Index>(m.num_states) * m.num_actions,
               m.num_states);
    for (int s = 0; s < m.num_states; ++s) {
        const auto& block = P.at(static_cast<std::size_t>(s));
        if (static_cast<int>(block.size()) != m.num_actions)
            throw ValidationError("P: expected one row per action");
        for (int a = 0; a < m.num_actions; ++a) {
            const auto& row = block.at(static_cast<std::size_t>(a));
            if (static_cast<int>(row.size()) != m.num_states)
                throw ValidationError("P: row has wrong length");
            for (int t = 0; t < m.num_states; ++t)
                m.P(m.pair_id(s, a), t) =
                    row.at(static_cast<std::size_t>(t)).get<double>();
        }
    }
    return m;
}

} // namespace

std::string to_json_string(const TabularCmdp& m) {
    return tabular_to_json(m).dump(2) + "\n";
}

std::string to_json_string(const LinearCmdp& m) {
    json j = tabular_to_json(m.tab);
    j["d"] = m.features.dim;
    j["phi"] = matrix_to_json(m.features.phi);
    j["psi_r"] = vector_to_json(m.psi_r);
    j["psi_c"] = vector_to_json(m.psi_c);
    j["anchors"] = matrix_to_json(m.anchors);
    return j.dump(2) + "\n";
}

TabularCmdp tabular_cmdp_from_json(const std::string& text) {
    return tabular_from_json_obj(json::parse(text));
}

LinearCmdp linear_cmdp_from_json(const std::string& text) {
    const json j = json::parse(text);
    LinearCmdp m;
    m.tab = tabular_from_json_obj(j);
    m.features.num_states = m.tab.num_states;
    m.features.num_actions = m.tab.num_actions;
    m.features.dim = j.at("d").get<int>();
    m.features.phi = matrix_from_json(j.at("phi"), "phi");
    m.psi_r = vector_from_json(j.at("psi_r"), "psi_r");
    m.psi_c = vector_from_json(j.at("psi_c"), "psi_c");
    m.anchors = matrix_from_json(j.at("anchors"), "anchors");
    return m;
}

bool is_linear_cmdp_file(const std::string& text) {
    return json::parse(text).contains("phi");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParameterError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot write file: " + path);
    out << text;
}

void save_tabular_cmdp(const TabularCmdp& m, const std::string& path) {
    write_text_file(path, to_json_string(m));
}
void save_linear_cmdp(const LinearCmdp& m, const std::string& path) {
    write_text_file(path, to_json_string(m));
}
TabularCmdp load_tabular_cmdp(const std::string& path) {
    return tabular_cmdp_from_json(read_text_file(path));
}
LinearCmdp load_linear_cmdp(const std::string& path) {
    return linear_cmdp_from_json(read_text_file(path));
}

} // namespace cmdplab
