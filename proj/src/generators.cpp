#include "cmdplab/generators.hpp"

#include <algorithm>
#include <string>

#include "cmdplab/oracle.hpp"
#include "cmdplab/rng.hpp"

namespace cmdplab {

namespace {

// Generator streams are keyed (seed, kGenTag + slot, index).  The offset
// keeps them disjoint from the data-collection streams, which use plain
// state-action pair ids (< 2^32) as their second key, even when the same
// seed is reused for generation and collection.
constexpr std::uint64_t kGenTag = std::uint64_t{1} << 32;
constexpr std::uint64_t kSlotTransitions = 0;
constexpr std::uint64_t kSlotReward = 1;
constexpr std::uint64_t kSlotCost = 2;
constexpr std::uint64_t kSlotAnchors = 3;
constexpr std::uint64_t kSlotFeatures = 4;
constexpr std::uint64_t kSlotPsiR = 5;
constexpr std::uint64_t kSlotPsiC = 6;

// psi entries are scaled slightly below 1 so that convex combinations
// phi * psi cannot round above the closed unit interval.
constexpr double kPsiScale = 0.999999;

void check_shape(int num_states, int num_actions, double gamma,
                 double slater_min, const char* who) {
    if (num_states < 1 || num_actions < 1)
        throw ParameterError(std::string(who) +
                             ": need at least one state and one action");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ParameterError(std::string(who) +
                             ": gamma must lie in [0, 1)");
    if (!(slater_min >= 0.0))
        throw ParameterError(std::string(who) +
                             ": slater_min must be >= 0");
}

Eigen::MatrixXd uniform_table(std::uint64_t seed, std::uint64_t slot, int S,
                              int A, double scale) {
    RngStream stream = RngStream::from_key(seed, kGenTag + slot, 0);
    Eigen::MatrixXd out(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) out(s, a) = scale * stream.next_double();
    return out;
}

/// Sets b so that max_pi V_c(rho) - b = slater_min * horizon, throwing
/// when that slack is unreachable with a nonnegative threshold.
void apply_slater_threshold(TabularCmdp& m, double slater_min,
                            const char* who) {
    m.b = 0.0;
    const double v_max = exact_mdp_optimum(m, m.c, 1e-9).v_rho;
    const double margin = slater_min * m.horizon();
    if (v_max < margin)
        throw ParameterError(
            std::string(who) + ": requested Slater slack " +
            std::to_string(margin) +
            " exceeds the best constraint value " + std::to_string(v_max) +
            "; lower slater_min or change the seed");
    m.b = std::max(0.0, v_max - margin);
}

} // namespace

TabularCmdp random_tabular_cmdp(std::uint64_t seed, int num_states,
                                int num_actions, double gamma,
                                double slater_min) {
    check_shape(num_states, num_actions, gamma, slater_min,
                "random_tabular_cmdp");
    TabularCmdp m;
    m.num_states = num_states;
    m.num_actions = num_actions;
    m.gamma = gamma;
    m.rho = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
    m.r = uniform_table(seed, kSlotReward, num_states, num_actions, 1.0);
    m.c = uniform_table(seed, kSlotCost, num_states, num_actions, 1.0);
    m.P.resize(m.pair_count(), num_states);
    for (int p = 0; p < m.pair_count(); ++p) {
        RngStream stream = RngStream::from_key(
            seed, kGenTag + kSlotTransitions, static_cast<std::uint64_t>(p));
        const std::vector<double> row = dirichlet_uniform(num_states, stream);
        for (int s = 0; s < num_states; ++s) m.P(p, s) = row[s];
    }
    apply_slater_threshold(m, slater_min, "random_tabular_cmdp");
    require_valid(m);
    return m;
}

FeatureMap random_feature_map(std::uint64_t seed, int num_states,
                              int num_actions, int dim) {
    if (num_states < 1 || num_actions < 1)
        throw ParameterError(
            "random_feature_map: need at least one state and one action");
    const int pairs = num_states * num_actions;
    if (dim < 1 || dim > pairs)
        throw ParameterError(
            "random_feature_map: dim must lie in [1, S*A], got " +
            std::to_string(dim));
    FeatureMap f;
    f.num_states = num_states;
    f.num_actions = num_actions;
    f.dim = dim;
    f.phi = Eigen::MatrixXd::Zero(pairs, dim);
    for (int p = 0; p < pairs; ++p) {
        if (p < dim) {
            f.phi(p, p) = 1.0; // coordinate rows force full column rank
            continue;
        }
        RngStream stream = RngStream::from_key(
            seed, kGenTag + kSlotFeatures, static_cast<std::uint64_t>(p));
        const std::vector<double> row = dirichlet_uniform(dim, stream);
        for (int j = 0; j < dim; ++j) f.phi(p, j) = row[j];
    }
    require_valid(f);
    return f;
}

LinearCmdp anchor_linear_cmdp(std::uint64_t seed, int num_states,
                              int num_actions, int dim, double gamma,
                              double slater_min) {
    check_shape(num_states, num_actions, gamma, slater_min,
                "anchor_linear_cmdp");
    LinearCmdp m;
    m.features = random_feature_map(seed, num_states, num_actions, dim);

    m.anchors.resize(dim, num_states);
    for (int j = 0; j < dim; ++j) {
        RngStream stream = RngStream::from_key(
            seed, kGenTag + kSlotAnchors, static_cast<std::uint64_t>(j));
        const std::vector<double> row = dirichlet_uniform(num_states, stream);
        for (int s = 0; s < num_states; ++s) m.anchors(j, s) = row[s];
    }

    RngStream psi_r_stream = RngStream::from_key(seed, kGenTag + kSlotPsiR, 0);
    RngStream psi_c_stream = RngStream::from_key(seed, kGenTag + kSlotPsiC, 0);
    m.psi_r.resize(dim);
    m.psi_c.resize(dim);
    for (int j = 0; j < dim; ++j) {
        m.psi_r(j) = kPsiScale * psi_r_stream.next_double();
        m.psi_c(j) = kPsiScale * psi_c_stream.next_double();
    }

    using RowMajorMap =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                       Eigen::Dynamic, Eigen::RowMajor>>;
    const Eigen::VectorXd r_flat = m.features.phi * m.psi_r;
    const Eigen::VectorXd c_flat = m.features.phi * m.psi_c;
    m.tab.num_states = num_states;
    m.tab.num_actions = num_actions;
    m.tab.gamma = gamma;
    m.tab.rho = Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
    m.tab.r = RowMajorMap(r_flat.data(), num_states, num_actions);
    m.tab.c = RowMajorMap(c_flat.data(), num_states, num_actions);
    m.tab.P = m.features.phi * m.anchors;
    apply_slater_threshold(m.tab, slater_min, "anchor_linear_cmdp");
    require_valid(m);
    return m;
}

} // namespace cmdplab
