// This file is part of cmdp-lab, a solver toolkit for discounted
// constrained MDPs driven by generative-model sampling.
// Distributed under the MIT license; see LICENSE at the repository root.

#include "cmdplab/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace cmdplab {

namespace {

/// Finish a Design whose coreset and weights are set: cache feature
/// rows, form G, invert it, measure conditioning and the realized g.
void finalize(Design& d, const FeatureMap& features) {
    const int n = d.size();
    const int dim = features.dim;
    d.phi_coreset.resize(n, dim);
    for (int i = 0; i < n; ++i)
        d.phi_coreset.row(i) =
            features.row(d.coreset[static_cast<std::size_t>(i)].first,
                         d.coreset[static_cast<std::size_t>(i)].second);

    d.G.setZero(dim, dim);
    for (int i = 0; i < n; ++i)
        d.G += d.weights(i) * d.phi_coreset.row(i).transpose() *
               d.phi_coreset.row(i);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.G);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > design_tol::min_eigenvalue))
        throw NumericalError("design matrix is singular (min eigenvalue " +
                             std::to_string(lo) + ")");
    d.condition_estimate = hi / lo;
    d.condition_warning = d.condition_estimate > design_tol::condition_limit;
    d.G_inv = eig.eigenvectors() *
              eig.eigenvalues().cwiseInverse().asDiagonal() *
              eig.eigenvectors().transpose();

    d.g_value = 0.0;
    for (int s = 0; s < features.num_states; ++s)
        for (int a = 0; a < features.num_actions; ++a) {
            const Eigen::RowVectorXd phi = features.row(s, a);
            d.g_value = std::max(
                d.g_value,
                static_cast<double>(phi * d.G_inv * phi.transpose()));
        }
}

/// nu(s,a) = phi' G^{-1} phi for every pair, flattened pair-major.
Eigen::VectorXd all_nu(const Design& d, const FeatureMap& features) {
    Eigen::VectorXd nu(features.pair_count());
    for (int s = 0; s < features.num_states; ++s)
        for (int a = 0; a < features.num_actions; ++a) {
            const Eigen::RowVectorXd phi = features.row(s, a);
            nu(s * features.num_actions + a) =
                phi * d.G_inv * phi.transpose();
        }
    return nu;
}

struct Extremes {
    int arg_max = 0;
    int arg_min = 0;
    double spread = 0.0; // max - min of the projections
};

Extremes projection_extremes(const FeatureMap& features,
                             const Eigen::VectorXd& direction) {
    Extremes e;
    double best_hi = -std::numeric_limits<double>::infinity();
    double best_lo = std::numeric_limits<double>::infinity();
    for (int p = 0; p < features.pair_count(); ++p) {
        const double proj = features.phi.row(p).dot(direction);
        if (proj > best_hi) {
            best_hi = proj;
            e.arg_max = p;
        }
        if (proj < best_lo) {
            best_lo = proj;
            e.arg_min = p;
        }
    }
    e.spread = best_hi - best_lo;
    return e;
}

/// First standard-basis vector with a nonzero residual against the
/// orthonormal rows of `basis` (Gram-Schmidt with one re-pass), or a
/// zero vector when `basis` already spans R^d.
Eigen::VectorXd orthogonal_direction(const std::vector<Eigen::VectorXd>&
                                         basis,
                                     int dim) {
    for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, k);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) v -= b.dot(v) * b;
        if (v.norm() > 1e-10) return v;
    }
    return Eigen::VectorXd::Zero(dim);
}

void push_orthonormal(std::vector<Eigen::VectorXd>& basis,
                      Eigen::VectorXd x) {
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) x -= b.dot(x) * b;
    const double n = x.norm();
    if (n > 1e-10) basis.push_back(x / n);
}

Design equal_weight_design(const std::vector<int>& pairs,
                           const FeatureMap& features) {
    Design d;
    for (int p : pairs)
        d.coreset.emplace_back(p / features.num_actions,
                               p % features.num_actions);
    d.weights =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pairs.size()),
                                  1.0 / static_cast<double>(pairs.size()));
    finalize(d, features);
    return d;
}

std::string direction_string(const Eigen::VectorXd& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v(i));
    }
    return s + ")";
}

} // namespace

Design initialize_design(const FeatureMap& features) {
    const int dim = features.dim;
    std::vector<int> collected;   // pair ids, insertion order
    std::set<int> seen;
    auto collect = [&](int p) {
        if (seen.insert(p).second) collected.push_back(p);
    };

    std::vector<Eigen::VectorXd> directions; // orthonormal x_j basis
    Eigen::VectorXd c = Eigen::VectorXd::Unit(dim, 0);
    for (int j = 0; j < dim; ++j) {
        const Extremes e = projection_extremes(features, c);
        collect(e.arg_max);
        collect(e.arg_min);
        if (e.spread > 0.0)
            push_orthonormal(directions, features.phi.row(e.arg_max) -
                                             features.phi.row(e.arg_min));
        if (j + 1 < dim) {
            c = orthogonal_direction(directions, dim);
            if (c.isZero()) break; // directions already span R^d
        }
    }

    // The collected pairs can still miss directions (e.g. when all
    // features share an affine component); repair by chasing null
    // eigenvectors of G.  A null direction along which every feature
    // row projects identically certifies rank deficiency of phi.
    for (int attempt = 0; attempt <= dim; ++attempt) {
        Design d;
        try {
            d = equal_weight_design(collected, features);
            return d;
        } catch (const NumericalError&) {
            Design partial;
            for (int p : collected)
                partial.coreset.emplace_back(p / features.num_actions,
                                             p % features.num_actions);
            partial.weights = Eigen::VectorXd::Constant(
                static_cast<Eigen::Index>(collected.size()),
                1.0 / static_cast<double>(collected.size()));
            const int n = partial.size();
            partial.phi_coreset.resize(n, dim);
            for (int i = 0; i < n; ++i)
                partial.phi_coreset.row(i) = features.row(
                    partial.coreset[static_cast<std::size_t>(i)].first,
                    partial.coreset[static_cast<std::size_t>(i)].second);
            Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim);
            for (int i = 0; i < n; ++i)
                G += partial.weights(i) *
                     partial.phi_coreset.row(i).transpose() *
                     partial.phi_coreset.row(i);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
            const Eigen::VectorXd null_dir = eig.eigenvectors().col(0);
            const Extremes e = projection_extremes(features, null_dir);
            if (!(e.spread > 0.0))
                throw ValidationError(
                    "feature matrix is rank-deficient: every feature row "
                    "has the same projection along direction " +
                    direction_string(null_dir));
            const std::size_t before = collected.size();
            collect(e.arg_max);
            collect(e.arg_min);
            if (collected.size() == before)
                throw NumericalError(
                    "design rank repair stalled along direction " +
                    direction_string(null_dir));
        }
    }
    throw NumericalError("design rank repair did not converge");
}

Design frank_wolfe(const FeatureMap& features, double eps_fw,
                   long max_iters, std::vector<double>* max_nu_trace) {
    if (!(eps_fw > 0.0)) throw ParameterError("eps_fw must be positive");
    const int dim = features.dim;
    if (max_iters < 0)
        max_iters = static_cast<long>(
            10.0 * dim * std::max(std::log(static_cast<double>(dim)), 1.0) +
            100.0);

    Design d = initialize_design(features);
    const int num_pairs = features.pair_count();
    const double dd = static_cast<double>(dim);

    for (int restart = 0; restart < 20; ++restart) {
        // Index of each pair inside the coreset, -1 if absent.
        std::vector<int> pos(static_cast<std::size_t>(num_pairs), -1);
        for (int i = 0; i < d.size(); ++i)
            pos[static_cast<std::size_t>(
                d.coreset[static_cast<std::size_t>(i)].first *
                    features.num_actions +
                d.coreset[static_cast<std::size_t>(i)].second)] = i;

        // Mass-shifting loop (skipped for d = 1, where the step size
        // formula degenerates and trimming alone yields the optimal
        // single-point design).
        if (dim > 1) {
            for (long iter = 0;; ++iter) {
                const Eigen::VectorXd nu = all_nu(d, features);
                int worst = 0;
                for (int p = 1; p < num_pairs; ++p)
                    if (nu(p) > nu(worst)) worst = p;
                if (max_nu_trace != nullptr)
                    max_nu_trace->push_back(nu(worst));
                const double delta = (nu(worst) - dd) / dd;
                if (delta <= eps_fw) break;
                if (iter >= max_iters)
                    throw NumericalError(
                        "Frank-Wolfe failed to reach eps_fw=" +
                        std::to_string(eps_fw) + " within " +
                        std::to_string(max_iters) +
                        " iterations (final delta " +
                        std::to_string(delta) + ")");
                const double eta =
                    (nu(worst) - dd) / ((dd - 1.0) * nu(worst));
                if (pos[static_cast<std::size_t>(worst)] < 0) {
                    pos[static_cast<std::size_t>(worst)] = d.size();
                    d.coreset.emplace_back(worst / features.num_actions,
                                           worst % features.num_actions);
                    d.weights.conservativeResize(d.size());
                    d.weights(d.size() - 1) = 0.0;
                }
                d.weights(pos[static_cast<std::size_t>(worst)]) += eta;
                d.weights /= 1.0 + eta;
                finalize(d, features);
            }
        }

        // Trim low-variance pairs by the threshold rule, evaluated on
        // the pre-trim design.
        {
            const Eigen::VectorXd nu = all_nu(d, features);
            double delta = (nu.maxCoeff() - dd) / dd;
            delta = std::max(delta, 0.0);
            const double threshold =
                dd * (1.0 + delta * dd / 2.0 -
                      std::sqrt(delta * (dd - 1.0) +
                                delta * delta * dd * dd / 4.0));
            // The relative slack keeps boundary points whose nu sits at
            // the threshold up to rounding (at delta = 0 the threshold
            // equals d exactly and every nu is d up to an ulp).
            Design trimmed;
            for (int i = 0; i < d.size(); ++i) {
                const auto& sa = d.coreset[static_cast<std::size_t>(i)];
                const int p = sa.first * features.num_actions + sa.second;
                if (nu(p) >= threshold - 1e-9 * dd) {
                    trimmed.coreset.push_back(sa);
                    trimmed.weights.conservativeResize(
                        trimmed.coreset.size());
                    trimmed.weights(trimmed.size() - 1) = d.weights(i);
                }
            }
            if (trimmed.size() == 0)
                throw NumericalError("design trim removed every coreset "
                                     "point");
            trimmed.weights /= trimmed.weights.sum();
            finalize(trimmed, features);
            d = std::move(trimmed);
        }

        if (d.g_value <= 2.0 * dd) break;
        if (restart == 19)
            throw NumericalError(
                "design construction could not reach g <= 2d (g = " +
                std::to_string(d.g_value) + ")");
        eps_fw /= 2.0; // tighten and refine from the trimmed design
    }

    // Support reduction: while |C| exceeds d(d+1)/2 + 1, walk along a
    // null vector of the rows (vech(phi phi'), 1) until a weight hits
    // zero; this preserves G and the weight sum.
    {
        const int bound = dim * (dim + 1) / 2 + 1;
        while (d.size() > bound) {
            const int n = d.size();
            const int rows = dim * (dim + 1) / 2 + 1;
            Eigen::MatrixXd Y(rows, n);
            for (int i = 0; i < n; ++i) {
                int row = 0;
                for (int a = 0; a < dim; ++a)
                    for (int b = a; b < dim; ++b)
                        Y(row++, i) = d.phi_coreset(i, a) *
                                      d.phi_coreset(i, b);
                Y(row, i) = 1.0;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(Y);
            if (lu.dimensionOfKernel() < 1)
                throw NumericalError("support reduction found no null "
                                     "direction despite oversized coreset");
            Eigen::VectorXd u = lu.kernel().col(0);
            // Walk toward the first vanishing weight.
            double t_pos = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (u(i) > 1e-14)
                    t_pos = std::min(t_pos, d.weights(i) / u(i));
            double t_neg = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (u(i) < -1e-14)
                    t_neg = std::min(t_neg, d.weights(i) / -u(i));
            double t;
            if (std::isfinite(t_pos))
                t = t_pos;
            else if (std::isfinite(t_neg)) {
                u = -u;
                t = t_neg;
            } else
                throw NumericalError("support reduction null direction is "
                                     "numerically zero");
            Design reduced;
            for (int i = 0; i < n; ++i) {
                const double w = d.weights(i) - t * u(i);
                if (w > 1e-13) {
                    reduced.coreset.push_back(
                        d.coreset[static_cast<std::size_t>(i)]);
                    reduced.weights.conservativeResize(
                        reduced.coreset.size());
                    reduced.weights(reduced.size() - 1) = w;
                }
            }
            if (reduced.size() >= d.size())
                throw NumericalError("support reduction failed to drop a "
                                     "coreset point");
            reduced.weights /= reduced.weights.sum();
            finalize(reduced, features);
            d = std::move(reduced);
        }
    }
    return d;
}

Eigen::VectorXd wls_solve(const Design& design, const Eigen::VectorXd& z) {
    if (z.size() != design.size())
        throw ParameterError("wls_solve: z must have one value per coreset "
                             "element");
    if (!z.allFinite())
        throw NumericalError("wls_solve: non-finite regression target");
    if (design.size() == design.dim()) {
        // Square full-rank system: the weighted least-squares minimizer
        // interpolates, so solve phi_coreset * W = z directly.  On
        // permutation feature rows this is an exact pass-through.
        return Eigen::PartialPivLU<Eigen::MatrixXd>(design.phi_coreset)
            .solve(z);
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(design.dim());
    for (int i = 0; i < design.size(); ++i)
        rhs += design.weights(i) * z(i) *
               design.phi_coreset.row(i).transpose();
    return design.G_inv * rhs;
}

KwCheck kw_check(const Design& design, const FeatureMap& features,
                 const Eigen::VectorXd& z) {
    const Eigen::VectorXd w = wls_solve(design, z);
    double num = 0.0;
    for (int p = 0; p < features.pair_count(); ++p)
        num = std::max(num, std::abs(features.phi.row(p).dot(w)));
    const double den = z.size() ? z.cwiseAbs().maxCoeff() : 0.0;
    KwCheck out;
    if (den == 0.0)
        out.ratio = num == 0.0 ? 0.0
                               : std::numeric_limits<double>::infinity();
    else
        out.ratio = num / den;
    out.pass =
        out.ratio <= std::sqrt(2.0 * design.dim()) + design_tol::kw_slack;
    return out;
}

std::string design_to_json_string(const Design& d) {
    nlohmann::json j;
    nlohmann::json coreset = nlohmann::json::array();
    for (const auto& sa : d.coreset)
        coreset.push_back({sa.first, sa.second});
    j["coreset"] = std::move(coreset);
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < d.weights.size(); ++i)
        w.push_back(d.weights(i));
    j["weights"] = std::move(w);
    j["g_value"] = d.g_value;
    return j.dump(2) + "\n";
}

Design design_from_json(const std::string& text,
                        const FeatureMap& features) {
    const nlohmann::json j = nlohmann::json::parse(text);
    Design d;
    for (const auto& sa : j.at("coreset"))
        d.coreset.emplace_back(sa.at(0).get<int>(), sa.at(1).get<int>());
    const auto& w = j.at("weights");
    if (w.size() != d.coreset.size())
        throw ValidationError("design JSON: weights and coreset sizes "
                              "disagree");
    d.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (Eigen::Index i = 0; i < d.weights.size(); ++i)
        d.weights(i) = w.at(static_cast<std::size_t>(i)).get<double>();
    if (std::abs(d.weights.sum() - 1.0) > design_tol::weight_sum)
        throw ValidationError("design JSON: weights do not sum to 1");
    finalize(d, features);
    const double stored = j.at("g_value").get<double>();
    if (std::abs(stored - d.g_value) > 1e-9)
        throw ValidationError("design JSON: stored g_value " +
                              std::to_string(stored) +
                              " disagrees with recomputed " +
                              std::to_string(d.g_value));
    return d;
}

} // namespace cmdplab
