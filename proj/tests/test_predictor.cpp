#include <cmath>

#include "catch_amalgamated.hpp"

#include "fairib/data.hpp"
#include "fairib/predictor.hpp"
#include "fairib/solver.hpp"
#include "support/fixtures.hpp"

using namespace fairib;
using fairib_test::reference_joint;

namespace {

// |A|=1 joint whose posterior P(Y|u) under the identity encoder equals the
// requested per-x label distributions.
JointAXY posterior_fixture(const std::vector<std::vector<double>>& y_given_x) {
  const std::size_t nx = y_given_x.size();
  const std::size_t ny = y_given_x[0].size();
  Tensor t({1, nx, ny});
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      t.at(0, x, y) = y_given_x[x][y] / static_cast<double>(nx);
  return make_joint(std::move(t), Alphabet{1, {}}, Alphabet{nx, {}},
                    Alphabet{ny, {}});
}

Encoder identity_encoder(std::size_t n) {
  Mat q(n, n);
  for (std::size_t x = 0; x < n; ++x) q(x, x) = 1.0;
  return make_encoder(std::move(q));
}

Encoder constant_encoder(std::size_t nx, std::vector<double> row) {
  Mat q(nx, row.size());
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t u = 0; u < row.size(); ++u) q(x, u) = row[u];
  return make_encoder(std::move(q));
}

// Joint with X identical to Y and A correlated with X: the ideal-predictor
// fixture.
JointAXY ideal_chain_joint() {
  GeneratorSpec s;
  s.p_a = {0.35, 0.65};
  s.p_x_given_a = Mat(2, 2);
  s.p_x_given_a(0, 0) = 0.8;
  s.p_x_given_a(0, 1) = 0.2;
  s.p_x_given_a(1, 0) = 0.3;
  s.p_x_given_a(1, 1) = 0.7;
  s.p_y_given_x = Mat(2, 2);
  s.p_y_given_x(0, 0) = 1.0;
  s.p_y_given_x(1, 1) = 1.0;
  return spec_to_joint(s);
}

}  // namespace

TEST_CASE("Hamming rule votes for the maximum posterior") {
  const JointAXY j = posterior_fixture({{0.3, 0.7}, {0.7, 0.3}});
  const DecisionRule rule =
      bayes_rule(j, identity_encoder(2), LossMatrix::hamming(2));
  REQUIRE(rule(0) == 1);  // P(Y=1|u) = 0.7
  REQUIRE(rule(1) == 0);  // P(Y=1|u) = 0.3
}

TEST_CASE("Hamming ties go to the larger label, general losses to the smaller") {
  const JointAXY j = posterior_fixture({{0.5, 0.5}});
  const Encoder enc = identity_encoder(1);
  const DecisionRule hamming_rule = bayes_rule(j, enc, LossMatrix::hamming(2));
  REQUIRE(hamming_rule(0) == 1);

  // twice the Hamming loss: the same optimum, the generic tie convention
  LossMatrix doubled{Mat(2, 2, 2.0)};
  doubled.ell(0, 0) = 0.0;
  doubled.ell(1, 1) = 0.0;
  const DecisionRule generic_rule = bayes_rule(j, enc, doubled);
  REQUIRE(generic_rule(0) == 0);
}

TEST_CASE("asymmetric loss shifts the decision") {
  const JointAXY j = posterior_fixture({{0.6, 0.4}});
  LossMatrix loss{Mat(2, 2)};
  loss.ell(0, 1) = 10.0;
  loss.ell(1, 0) = 1.0;
  // expected losses: predict 0 -> 10 * 0.4 = 4.0, predict 1 -> 1 * 0.6 = 0.6
  const DecisionRule rule = bayes_rule(j, identity_encoder(1), loss);
  REQUIRE(rule(0) == 1);
}

TEST_CASE("dead clusters fall back to the prior decision") {
  const JointAXY j = posterior_fixture({{0.9, 0.1}, {0.2, 0.8}});
  // cluster 2 carries no mass; prior P(Y) = (0.55, 0.45) so Hamming picks 0
  const Encoder enc = constant_encoder(2, {0.5, 0.5, 0.0});
  const DecisionRule rule = bayes_rule(j, enc, LossMatrix::hamming(2));
  REQUIRE(rule(2) == 0);
}

TEST_CASE("bayes risk of the ideal chain is zero") {
  const JointAXY j = ideal_chain_joint();
  const Encoder enc = identity_encoder(2);
  const LossMatrix ham = LossMatrix::hamming(2);
  const DecisionRule rule = bayes_rule(j, enc, ham);
  REQUIRE(bayes_risk(j, enc, rule, ham) == 0.0);
}

TEST_CASE("bayes risk of a constant representation is the best constant guess") {
  const JointAXY j = spec_to_joint(fairib_test::tiny_instance());
  const auto py = j.py();  // (0.55, 0.45)
  const Encoder enc = constant_encoder(2, {1.0});
  const LossMatrix ham = LossMatrix::hamming(2);
  const DecisionRule rule = bayes_rule(j, enc, ham);
  REQUIRE(bayes_risk(j, enc, rule, ham) ==
          Catch::Approx(std::min(py[0], py[1])).margin(1e-12));
}

TEST_CASE("bayes risk matches full enumeration on a fitted encoder") {
  const JointAXY j = reference_joint();
  SolverParams p;
  p.alpha = 0.25;
  p.beta = 0.02;
  p.u_size = 4;
  p.epsilon = 1e-10;
  p.max_iters = 20000;
  p.restarts = 5;
  p.seed = 5;
  const FitResult f = fit(j, p);
  const LossMatrix ham = LossMatrix::hamming(2);
  const DecisionRule rule = bayes_rule(j, f.encoder, ham);

  const Mat puy = induced_uy(j, f.encoder);
  double want = 0.0;
  for (std::size_t u = 0; u < 4; ++u)
    for (std::size_t y = 0; y < 2; ++y)
      want += puy(u, y) * ham.ell(rule(u), y);
  REQUIRE(bayes_risk(j, f.encoder, rule, ham) ==
          Catch::Approx(want).margin(1e-14));
}

TEST_CASE("per-cluster optimality by enumeration") {
  const JointAXY j = reference_joint();
  LossMatrix loss{Mat(2, 2)};
  loss.ell(0, 1) = 3.0;
  loss.ell(1, 0) = 0.5;
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    const Encoder enc =
        make_encoder(fairib_test::seeded_rows(88, stream, j.nx(), 3));
    const DecisionRule rule = bayes_rule(j, enc, loss);
    const Marginal r = update_marginal(j, enc);
    const Decoder dec = update_decoder(j, enc, r);
    for (std::size_t u = 0; u < 3; ++u) {
      double chosen = 0.0;
      for (std::size_t y = 0; y < 2; ++y)
        chosen += loss.ell(rule(u), y) * dec(u, y);
      for (std::size_t cand = 0; cand < 2; ++cand) {
        double alt = 0.0;
        for (std::size_t y = 0; y < 2; ++y)
          alt += loss.ell(cand, y) * dec(u, y);
        REQUIRE(chosen <= alt + 1e-12);
      }
    }
  }
}

TEST_CASE("bayes rule beats random rules") {
  const JointAXY j = reference_joint();
  const Encoder enc = make_encoder(fairib_test::seeded_rows(17, 0, j.nx(), 4));
  const LossMatrix ham = LossMatrix::hamming(2);
  const DecisionRule best = bayes_rule(j, enc, ham);
  const double best_risk = bayes_risk(j, enc, best, ham);
  Rng rng(555);
  for (int trial = 0; trial < 100; ++trial) {
    DecisionRule random_rule;
    for (std::size_t u = 0; u < 4; ++u)
      random_rule.y_for_u.push_back(rng.next_u64() % 2);
    REQUIRE(best_risk <=
            bayes_risk(j, enc, random_rule, ham) + 1e-12);
  }
}

TEST_CASE("Hamming specialization equals posterior argmax with >= ties") {
  const JointAXY j = reference_joint();
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    const Encoder enc =
        make_encoder(fairib_test::seeded_rows(23, stream, j.nx(), 3));
    const DecisionRule rule = bayes_rule(j, enc, LossMatrix::hamming(2));
    const Marginal r = update_marginal(j, enc);
    const Decoder dec = update_decoder(j, enc, r);
    for (std::size_t u = 0; u < 3; ++u) {
      std::size_t arg = 0;
      for (std::size_t y = 1; y < 2; ++y)
        if (dec(u, y) >= dec(u, arg)) arg = y;
      REQUIRE(rule(u) == arg);
    }
  }
}

TEST_CASE("the ideal predictor satisfies equalized odds exactly") {
  const JointAXY j = ideal_chain_joint();
  const Encoder enc = identity_encoder(2);
  const DecisionRule rule = bayes_rule(j, enc, LossMatrix::hamming(2));
  const OddsAudit audit = equalized_odds_gap(j, enc, rule);
  REQUIRE(audit.cmi.value == 0.0);
  REQUIRE(audit.max_rate_gap == 0.0);
}

TEST_CASE("a constant predictor satisfies equalized odds") {
  const JointAXY j = reference_joint();
  const Encoder enc = constant_encoder(j.nx(), {0.7, 0.3});
  const DecisionRule rule = bayes_rule(j, enc, LossMatrix::hamming(2));
  REQUIRE(rule(0) == rule(1));
  const OddsAudit audit = equalized_odds_gap(j, enc, rule);
  REQUIRE(std::abs(audit.cmi.value) <= 1e-12);
  REQUIRE(std::abs(audit.max_rate_gap) <= 1e-12);
}

TEST_CASE("the fairness penalty reduces the audited leakage on the pinned run") {
  const JointAXY j = reference_joint();
  const LossMatrix ham = LossMatrix::hamming(2);
  double cmi[2];
  int i = 0;
  for (double beta : {0.0, 0.025}) {
    SolverParams p;
    p.alpha = 0.25;
    p.beta = beta;
    p.u_size = 4;
    p.epsilon = 1e-10;
    p.max_iters = 20000;
    p.restarts = 10;
    p.seed = 5;
    const FitResult f = fit(j, p);
    const DecisionRule rule = bayes_rule(j, f.encoder, ham);
    cmi[i++] = equalized_odds_gap(j, f.encoder, rule).cmi.value;
  }
  REQUIRE(cmi[1] <= cmi[0]);
  REQUIRE(cmi[0] > 0.0);
}

TEST_CASE("audit consistency: zero leakage in one metric implies the other") {
  Rng rng(777);
  for (int trial = 0; trial < 30; ++trial) {
    const JointAXY j = spec_to_joint(fairib_test::random_model_spec(rng, 2, 4, 2));
    const Encoder enc =
        make_encoder(fairib_test::random_interior_rows(rng, 4, 3));
    DecisionRule rule;
    for (std::size_t u = 0; u < 3; ++u)
      rule.y_for_u.push_back(rng.next_u64() % 2);
    const OddsAudit audit = equalized_odds_gap(j, enc, rule);
    REQUIRE(audit.cmi.value >= 0.0);
    REQUIRE(audit.max_rate_gap >= 0.0);
    if (audit.cmi.value <= 1e-12) REQUIRE(audit.max_rate_gap <= 1e-9);
    if (audit.max_rate_gap <= 1e-12) REQUIRE(audit.cmi.value <= 1e-9);
  }
}

TEST_CASE("rules with out-of-range labels are rejected") {
  const JointAXY j = reference_joint();
  const Encoder enc = constant_encoder(j.nx(), {0.5, 0.5});
  DecisionRule bad{{0, 5}};
  const LossMatrix ham = LossMatrix::hamming(2);
  REQUIRE_THROWS_AS(bayes_risk(j, enc, bad, ham), BadParameter);
  REQUIRE_THROWS_AS(equalized_odds_gap(j, enc, bad), BadParameter);
  DecisionRule short_rule{{0}};
  REQUIRE_THROWS_AS(bayes_risk(j, enc, short_rule, ham), BadParameter);
}

TEST_CASE("loss matrix validation") {
  LossMatrix bad{Mat(2, 3)};
  REQUIRE_THROWS_AS(bad.validate(), BadParameter);
  LossMatrix neg{Mat(2, 2)};
  neg.ell(0, 1) = -1.0;
  REQUIRE_THROWS_AS(neg.validate(), BadParameter);
  REQUIRE(LossMatrix::hamming(3).is_hamming());
}
