// Unit tests for the core CMDP types: validation, sampling, policies,
// and JSON round-trips.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "cmdplab/cmdp.hpp"
#include "cmdplab/generators.hpp"
#include "cmdplab/policy.hpp"
#include "cmdplab/rng.hpp"

using namespace cmdplab;

namespace {

TabularCmdp identity_chain() {
    TabularCmdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.gamma = 0.9;
    m.b = 0.0;
    m.rho = Eigen::VectorXd::Ones(1);
    m.r = Eigen::MatrixXd::Ones(1, 1);
    m.c = Eigen::MatrixXd::Ones(1, 1);
    m.P = Eigen::MatrixXd::Ones(1, 1);
    return m;
}

} // namespace

TEST_CASE("validate: the 1-pair identity chain is clean") {
    CHECK(validate(identity_chain()).empty());
}

TEST_CASE("validate: a sub-stochastic row is reported with its location") {
    TabularCmdp m = identity_chain();
    m.P(0, 0) = 0.9;
    const std::vector<std::string> v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("P row 0") != std::string::npos);
    CHECK(v[0].find("0.9") != std::string::npos);
}

TEST_CASE("validate: gamma = 1 is rejected") {
    TabularCmdp m = identity_chain();
    m.gamma = 1.0;
    const std::vector<std::string> v = validate(m);
    REQUIRE(!v.empty());
    bool mentions_gamma = false;
    for (const auto& s : v)
        if (s.find("gamma") != std::string::npos) mentions_gamma = true;
    CHECK(mentions_gamma);
}

TEST_CASE("validate: rewards outside [0,1] and bad b are caught") {
    TabularCmdp m = identity_chain();
    m.r(0, 0) = 1.5;
    CHECK(!validate(m).empty());

    TabularCmdp m2 = identity_chain();
    m2.b = m2.horizon(); // b must be < 1/(1-gamma)
    CHECK(!validate(m2).empty());
}

TEST_CASE("gen_sample: a point-mass row always returns its atom") {
    TabularCmdp m;
    m.num_states = 5;
    m.num_actions = 1;
    m.gamma = 0.5;
    m.b = 0.0;
    m.rho = Eigen::VectorXd::Constant(5, 0.2);
    m.r = Eigen::MatrixXd::Zero(5, 1);
    m.c = Eigen::MatrixXd::Zero(5, 1);
    m.P = Eigen::MatrixXd::Zero(5, 5);
    for (int s = 0; s < 5; ++s) m.P(s, 3) = 1.0; // every pair jumps to 3
    require_valid(m);
    RngStream stream = RngStream::from_key(1);
    for (int i = 0; i < 50; ++i) CHECK(gen_sample(m, i % 5, 0, stream) == 3);
}

TEST_CASE("gen_sample: uniform two-state row has balanced frequencies") {
    TabularCmdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.gamma = 0.5;
    m.b = 0.0;
    m.rho = Eigen::VectorXd::Constant(2, 0.5);
    m.r = Eigen::MatrixXd::Zero(2, 1);
    m.c = Eigen::MatrixXd::Zero(2, 1);
    m.P = Eigen::MatrixXd::Constant(2, 2, 0.5);
    require_valid(m);
    RngStream stream = RngStream::from_key(2024);
    int zeros = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        if (gen_sample(m, 0, 0, stream) == 0) ++zeros;
    // Binomial(1e5, 0.5): sd ~ 158, so +-1000 is > 6 sigma of slack.
    CHECK(std::abs(zeros - n / 2) < 1000);
}

TEST_CASE("gen_sample: same stream state gives the same draw") {
    const TabularCmdp m = random_tabular_cmdp(3, 4, 2, 0.8, 0.05);
    RngStream a = RngStream::from_key(7, 8);
    RngStream b = a; // identical state
    for (int i = 0; i < 20; ++i)
        CHECK(gen_sample(m, i % 4, i % 2, a) ==
              gen_sample(m, i % 4, i % 2, b));
}

TEST_CASE("gen_sample: out-of-range indices are rejected") {
    const TabularCmdp m = identity_chain();
    RngStream s = RngStream::from_key(0);
    CHECK_THROWS_AS((void)gen_sample(m, 1, 0, s), ParameterError);
    CHECK_THROWS_AS((void)gen_sample(m, 0, -1, s), ParameterError);
}

TEST_CASE("induced transition of a stochastic policy is row-stochastic") {
    const TabularCmdp m = random_tabular_cmdp(11, 6, 3, 0.9, 0.05);
    RngStream s = RngStream::from_key(99);
    Eigen::MatrixXd table(m.num_states, m.num_actions);
    for (int st = 0; st < m.num_states; ++st) {
        const std::vector<double> row = dirichlet_uniform(m.num_actions, s);
        for (int a = 0; a < m.num_actions; ++a) table(st, a) = row[a];
    }
    const PolicyPtr pi = Policy::stochastic(table);
    // P_pi(s, s') = sum_a pi(a|s) P(s'|s,a)
    for (int st = 0; st < m.num_states; ++st) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(m.num_states);
        for (int a = 0; a < m.num_actions; ++a)
            row += table(st, a) * m.P.row(m.pair_id(st, a)).transpose();
        CHECK(std::abs(row.sum() - 1.0) <= 1e-10);
        CHECK(row.minCoeff() >= -1e-15);
    }
}

TEST_CASE("greedy-linear over one-hot features is the table argmax") {
    const int S = 5, A = 4;
    const FeatureMap f = FeatureMap::one_hot(S, A);
    RngStream s = RngStream::from_key(17, 0);
    Eigen::MatrixXd q(S, A);
    for (int st = 0; st < S; ++st)
        for (int a = 0; a < A; ++a) q(st, a) = s.next_double();
    // Insert deliberate ties to exercise lowest-index tie-breaking.
    q(1, 0) = q(1, 2) = q.row(1).maxCoeff() + 1.0;
    q(3, 1) = q(3, 3) = q.row(3).maxCoeff() + 1.0;

    Eigen::VectorXd theta(S * A);
    for (int st = 0; st < S; ++st)
        for (int a = 0; a < A; ++a) theta(st * A + a) = q(st, a);
    const PolicyPtr pi = Policy::greedy_linear(theta);
    const Eigen::MatrixXd table = materialize(*pi, S, A, &f);
    for (int st = 0; st < S; ++st) {
        int best = 0;
        for (int a = 1; a < A; ++a)
            if (q(st, a) > q(st, best)) best = a;
        for (int a = 0; a < A; ++a)
            CHECK(table(st, a) == (a == best ? 1.0 : 0.0));
    }
    CHECK(table(1, 0) == 1.0); // tie at actions {0,2} resolves to 0
    CHECK(table(3, 1) == 1.0); // tie at actions {1,3} resolves to 1
}

TEST_CASE("tabular JSON round-trip is value-identical") {
    const TabularCmdp m = random_tabular_cmdp(5, 7, 3, 0.85, 0.05);
    const TabularCmdp back = tabular_cmdp_from_json(to_json_string(m));
    CHECK(back.num_states == m.num_states);
    CHECK(back.num_actions == m.num_actions);
    CHECK(back.gamma == m.gamma);
    CHECK(back.b == m.b);
    CHECK((back.rho.array() == m.rho.array()).all());
    CHECK((back.r.array() == m.r.array()).all());
    CHECK((back.c.array() == m.c.array()).all());
    CHECK((back.P.array() == m.P.array()).all());
}

TEST_CASE("linear JSON round-trip is value-identical and tagged") {
    const LinearCmdp lm = anchor_linear_cmdp(2, 6, 2, 3, 0.8, 0.05);
    const std::string text = to_json_string(lm);
    CHECK(is_linear_cmdp_file(text));
    CHECK(!is_linear_cmdp_file(to_json_string(lm.tab)));
    const LinearCmdp back = linear_cmdp_from_json(text);
    CHECK((back.features.phi.array() == lm.features.phi.array()).all());
    CHECK((back.psi_r.array() == lm.psi_r.array()).all());
    CHECK((back.psi_c.array() == lm.psi_c.array()).all());
    CHECK((back.anchors.array() == lm.anchors.array()).all());
    CHECK((back.tab.P.array() == lm.tab.P.array()).all());
}

TEST_CASE("policy JSON round-trip preserves every variant") {
    const PolicyPtr det = Policy::deterministic(std::vector<int>{2, 0, 1});
    const PolicyPtr det2 = policy_from_json(policy_to_json_string(*det));
    CHECK(det2->kind == PolicyKind::Deterministic);
    CHECK(det2->actions == det->actions);

    Eigen::MatrixXd table(2, 2);
    table << 0.25, 0.75, 0.5, 0.5;
    const PolicyPtr sto = Policy::stochastic(table);
    const PolicyPtr sto2 = policy_from_json(policy_to_json_string(*sto));
    CHECK(sto2->kind == PolicyKind::Stochastic);
    CHECK((sto2->probs.array() == sto->probs.array()).all());

    Eigen::VectorXd theta(3);
    theta << 0.1, -2.0, 3.5;
    const PolicyPtr lin = Policy::greedy_linear(theta);
    const PolicyPtr lin2 = policy_from_json(policy_to_json_string(*lin));
    CHECK(lin2->kind == PolicyKind::GreedyLinear);
    CHECK((lin2->theta.array() == lin->theta.array()).all());

    const PolicyPtr mix =
        Policy::mixture({det, sto}, std::vector<double>{0.25, 0.75});
    const PolicyPtr mix2 = policy_from_json(policy_to_json_string(*mix));
    REQUIRE(mix2->kind == PolicyKind::Mixture);
    REQUIRE(mix2->atoms.size() == 2);
    CHECK(mix2->weights == mix->weights);
    CHECK(mix2->atoms[0]->actions == det->actions);
}

TEST_CASE("mixture materialization averages and dedups atoms") {
    const int S = 2, A = 2;
    const PolicyPtr a0 = Policy::deterministic(std::vector<int>{0, 0});
    const PolicyPtr a1 = Policy::deterministic(std::vector<int>{1, 1});
    const PolicyPtr mix =
        Policy::mixture({a0, a1, a0}, std::vector<double>{0.25, 0.5, 0.25});
    const Eigen::MatrixXd table = materialize(*mix, S, A);
    CHECK(table(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(table(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    // A mixture of K copies of one policy is exactly that policy.
    const PolicyPtr same = Policy::mixture(
        {a0, a0, a0}, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
    const Eigen::MatrixXd t2 = materialize(*same, S, A);
    CHECK(t2(0, 0) == 1.0);
    CHECK(t2(1, 0) == 1.0);
}
