#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "fairib/distributions.hpp"
#include "fairib/errors.hpp"

namespace fairib {

// Round-off slack: information quantities this far below zero are clamped to
// zero; anything more negative is a bug, not float noise.
inline constexpr double kMiRoundoffTol = 1e-12;

/// Information quantity in natural-log units. Infinite only for KL with a
/// support violation.
struct Nats {
  double value = 0.0;

  bool infinite() const { return std::isinf(value); }
  friend bool operator==(const Nats&, const Nats&) = default;
};

inline Nats operator+(Nats a, Nats b) { return {a.value + b.value}; }
inline Nats operator-(Nats a, Nats b) { return {a.value - b.value}; }
inline Nats operator-(Nats a) { return {-a.value}; }
inline Nats operator*(double c, Nats a) { return {c * a.value}; }

namespace detail {
inline double clamp_roundoff(double v) {
  if (v < 0.0 && v >= -kMiRoundoffTol) return 0.0;
  return v;
}
}  // namespace detail

/// D(p || q) = sum_i p_i log(p_i / q_i), with 0 log(0/q) = 0 and an infinite
/// result when p_i > 0 while q_i = 0.
inline Nats kl_divergence(std::span<const double> p,
                          std::span<const double> q) {
  if (p.size() != q.size())
    throw LengthMismatch("kl_divergence: vectors of different length");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return {std::numeric_limits<double>::infinity()};
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return {detail::clamp_roundoff(acc)};
}

/// H(p) = -sum_i p_i log p_i.
inline Nats entropy(std::span<const double> p) {
  double acc = 0.0;
  for (double v : p)
    if (v > 0.0) acc -= v * std::log(v);
  return {acc};
}

/// I(X;Y) of a normalized 2-d joint, by exact summation.
inline Nats mutual_information(const Mat& pxy) {
  std::vector<double> px(pxy.rows, 0.0), py(pxy.cols, 0.0);
  for (std::size_t x = 0; x < pxy.rows; ++x)
    for (std::size_t y = 0; y < pxy.cols; ++y) {
      px[x] += pxy(x, y);
      py[y] += pxy(x, y);
    }
  double acc = 0.0;
  for (std::size_t x = 0; x < pxy.rows; ++x)
    for (std::size_t y = 0; y < pxy.cols; ++y) {
      const double p = pxy(x, y);
      if (p > 0.0) acc += p * std::log(p / (px[x] * py[y]));
    }
  if (acc < -kMiRoundoffTol)
    throw InternalError("mutual information below -1e-12");
  return {detail::clamp_roundoff(acc)};
}

/// I(A;B|C) of a normalized 3-d joint indexed (a, b, c):
/// sum_c p(c) I(A;B | C=c). Slices with p(c) = 0 contribute nothing.
inline Nats conditional_mutual_information(const Tensor& pabc) {
  if (pabc.rank() != 3)
    throw BadParameter("conditional_mutual_information: rank-3 tensor required");
  const std::size_t nA = pabc.shape[0], nB = pabc.shape[1], nC = pabc.shape[2];
  double acc = 0.0;
  for (std::size_t c = 0; c < nC; ++c) {
    double pc = 0.0;
    for (std::size_t a = 0; a < nA; ++a)
      for (std::size_t b = 0; b < nB; ++b) pc += pabc.at(a, b, c);
    if (pc <= 0.0) continue;
    Mat slice(nA, nB);
    for (std::size_t a = 0; a < nA; ++a)
      for (std::size_t b = 0; b < nB; ++b) slice(a, b) = pabc.at(a, b, c) / pc;
    acc += pc * mutual_information(slice).value;
  }
  if (acc < -kMiRoundoffTol)
    throw InternalError("conditional mutual information below -1e-12");
  return {detail::clamp_roundoff(acc)};
}

/// Scalar objective alpha I(X;U) + beta I(A;U|Y) - I(U;Y), evaluated on the
/// distributions induced by P(a,x,y,u) = P(a,x,y) Q(u|x).
inline Nats lagrangian(const JointAXY& joint, const Encoder& enc, double alpha,
                       double beta) {
  if (!(alpha > 0.0)) throw BadParameter("alpha must be > 0");
  if (!(beta >= 0.0)) throw BadParameter("beta must be >= 0");
  check_encoder_joint(joint, enc);
  const Nats i_xu = mutual_information(induced_xu(joint, enc));
  const Nats i_uy = mutual_information(induced_uy(joint, enc));
  Nats i_auy{0.0};
  if (beta > 0.0)
    i_auy = conditional_mutual_information(induced_auy(joint, enc));
  return alpha * i_xu + beta * i_auy - i_uy;
}

}  // namespace fairib
