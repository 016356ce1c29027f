#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fairib/distributions.hpp"
#include "fairib/errors.hpp"
#include "fairib/information.hpp"
#include "fairib/solver.hpp"

namespace fairib {

/// ell(yhat, y): cost of predicting yhat when the true label is y.
struct LossMatrix {
  Mat ell;

  void validate() const {
    if (ell.rows == 0 || ell.rows != ell.cols)
      throw BadParameter("loss matrix must be square and non-empty");
    for (double v : ell.v)
      if (!(v >= 0.0)) throw BadParameter("loss entries must be >= 0");
  }

  static LossMatrix hamming(std::size_t ny) {
    Mat m(ny, ny, 1.0);
    for (std::size_t y = 0; y < ny; ++y) m(y, y) = 0.0;
    return {std::move(m)};
  }

  bool is_hamming() const {
    for (std::size_t i = 0; i < ell.rows; ++i)
      for (std::size_t j = 0; j < ell.cols; ++j)
        if (ell(i, j) != (i == j ? 0.0 : 1.0)) return false;
    return true;
  }
};

/// Deterministic decision rule u -> yhat.
struct DecisionRule {
  std::vector<std::size_t> y_for_u;

  std::size_t operator()(std::size_t u) const { return y_for_u[u]; }
};

namespace detail {

inline void check_rule(const DecisionRule& rule, std::size_t nu,
                       std::size_t ny) {
  if (rule.y_for_u.size() != nu)
    throw BadParameter("decision rule size does not match |U|");
  for (std::size_t yh : rule.y_for_u)
    if (yh >= ny)
      throw BadParameter("decision rule label outside the Y alphabet");
}

// Posterior P(Y|u) induced by (joint, encoder); clusters with marginal mass
// below the threshold fall back to the prior P(Y).
inline Mat cluster_posteriors(const JointAXY& joint, const Encoder& enc,
                              double dead_cluster_tol) {
  const Marginal r = update_marginal(joint, enc);
  const Decoder dec = update_decoder(joint, enc, r, dead_cluster_tol);
  const auto prior = joint.py();
  Mat post(enc.nu(), joint.ny());
  for (std::size_t u = 0; u < enc.nu(); ++u)
    for (std::size_t y = 0; y < joint.ny(); ++y)
      post(u, y) = dec.dead(u) ? prior[y] : dec(u, y);
  return post;
}

}  // namespace detail

/// Bayes-risk-minimizing rule: delta(u) = argmin_yhat sum_y ell(yhat,y) P(y|u).
/// Hamming loss keeps the posterior-argmax ">=" convention (ties go to the
/// larger label); every other loss breaks ties toward the smallest index.
inline DecisionRule bayes_rule(const JointAXY& joint, const Encoder& enc,
                               const LossMatrix& loss,
                               double dead_cluster_tol = 1e-12) {
  loss.validate();
  check_encoder_joint(joint, enc);
  if (loss.ell.rows != joint.ny())
    throw BadParameter("loss matrix side does not match |Y|");
  const Mat post = detail::cluster_posteriors(joint, enc, dead_cluster_tol);
  const bool hamming = loss.is_hamming();

  DecisionRule rule;
  rule.y_for_u.resize(enc.nu());
  for (std::size_t u = 0; u < enc.nu(); ++u) {
    if (hamming) {
      std::size_t arg = 0;
      for (std::size_t y = 1; y < joint.ny(); ++y)
        if (post(u, y) >= post(u, arg)) arg = y;
      rule.y_for_u[u] = arg;
      continue;
    }
    std::size_t arg = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t cand = 0; cand < joint.ny(); ++cand) {
      double risk = 0.0;
      for (std::size_t y = 0; y < joint.ny(); ++y)
        risk += loss.ell(cand, y) * post(u, y);
      if (risk < best) {
        best = risk;
        arg = cand;
      }
    }
    rule.y_for_u[u] = arg;
  }
  return rule;
}

/// L(delta) = E_{U,Y}[ ell(delta(U), Y) ], by exact summation.
inline double bayes_risk(const JointAXY& joint, const Encoder& enc,
                         const DecisionRule& rule, const LossMatrix& loss) {
  loss.validate();
  check_encoder_joint(joint, enc);
  detail::check_rule(rule, enc.nu(), joint.ny());
  if (loss.ell.rows != joint.ny())
    throw BadParameter("loss matrix side does not match |Y|");
  const Mat puy = induced_uy(joint, enc);
  double risk = 0.0;
  for (std::size_t u = 0; u < enc.nu(); ++u)
    for (std::size_t y = 0; y < joint.ny(); ++y)
      risk += puy(u, y) * loss.ell(rule(u), y);
  return risk;
}

struct OddsAudit {
  Nats cmi;             // I(A; Yhat | Y)
  double max_rate_gap;  // max |P(yhat|y,a) - P(yhat|y,a')| over valid cells
};

/// Equalized-odds audit of the end-to-end predictor yhat = delta(U).
inline OddsAudit equalized_odds_gap(const JointAXY& joint, const Encoder& enc,
                                    const DecisionRule& rule) {
  check_encoder_joint(joint, enc);
  detail::check_rule(rule, enc.nu(), joint.ny());
  const std::size_t na = joint.na(), nx = joint.nx(), ny = joint.ny();

  // Weight of each x landing on prediction yhat.
  Mat w(nx, ny);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t u = 0; u < enc.nu(); ++u) w(x, rule(u)) += enc(x, u);

  // Exact joint P(a, yhat, y).
  Tensor payy({na, ny, ny});
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) {
        const double paxy = joint.p(a, x, y);
        if (paxy == 0.0) continue;
        for (std::size_t yh = 0; yh < ny; ++yh)
          payy.at(a, yh, y) += paxy * w(x, yh);
      }

  OddsAudit audit{conditional_mutual_information(payy), 0.0};

  const Mat pay = joint.pay();
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t yh = 0; yh < ny; ++yh)
      for (std::size_t a = 0; a < na; ++a) {
        if (pay(a, y) <= 0.0) continue;
        const double rate_a = payy.at(a, yh, y) / pay(a, y);
        for (std::size_t a2 = a + 1; a2 < na; ++a2) {
          if (pay(a2, y) <= 0.0) continue;
          const double rate_a2 = payy.at(a2, yh, y) / pay(a2, y);
          audit.max_rate_gap =
              std::max(audit.max_rate_gap, std::abs(rate_a - rate_a2));
        }
      }
  return audit;
}

}  // namespace fairib
