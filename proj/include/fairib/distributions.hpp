#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairib/errors.hpp"

namespace fairib {

// Internal invariant maintained on every stored distribution.
inline constexpr double kNormTolInternal = 1e-12;
// Tolerance accepted on untrusted input before renormalizing.
inline constexpr double kNormTolInput = 1e-9;
// Input entries below this are treated as zero noise.
inline constexpr double kClampTol = 1e-15;
// Entries more negative than this are an error rather than noise.
inline constexpr double kNegativeTol = -1e-12;

/// Support of one finite variable; labels are display-only.
struct Alphabet {
  std::size_t size = 0;
  std::vector<std::string> labels;  // optional; empty or one per symbol

  void validate() const {
    if (size < 1) throw BadParameter("alphabet size must be >= 1");
    if (!labels.empty()) {
      if (labels.size() != size)
        throw BadParameter("alphabet labels must match size");
      std::set<std::string> uniq(labels.begin(), labels.end());
      if (uniq.size() != labels.size())
        throw BadParameter("alphabet labels must be unique");
    }
  }
};

/// Dense row-major matrix of doubles. rows/cols are fixed at construction.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v[r * cols + c];
  }
  std::span<const double> row(std::size_t r) const {
    return {v.data() + r * cols, cols};
  }
};

/// Dense row-major array of rank 1..3; just enough shape algebra for this
/// library's marginal/conditional plumbing.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), v(flat_size(shape), 0.0) {}

  static std::size_t flat_size(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return v.size(); }

  double& at(std::size_t i) { return v[i]; }
  double at(std::size_t i) const { return v[i]; }
  double& at(std::size_t i, std::size_t j) { return v[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j) const {
    return v[i * shape[1] + j];
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return v[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return v[(i * shape[1] + j) * shape[2] + k];
  }
};

/// Convenience builder for 3-d tensors from nested initializer data.
inline Tensor tensor3(const std::vector<std::vector<std::vector<double>>>& d) {
  if (d.empty() || d[0].empty() || d[0][0].empty())
    throw BadParameter("tensor3: empty input");
  Tensor t({d.size(), d[0].size(), d[0][0].size()});
  for (std::size_t i = 0; i < t.shape[0]; ++i) {
    if (d[i].size() != t.shape[1]) throw BadParameter("tensor3: ragged input");
    for (std::size_t j = 0; j < t.shape[1]; ++j) {
      if (d[i][j].size() != t.shape[2])
        throw BadParameter("tensor3: ragged input");
      for (std::size_t k = 0; k < t.shape[2]; ++k)
        t.at(i, j, k) = d[i][j][k];
    }
  }
  return t;
}

/// Immutable joint distribution P(A,X,Y) on finite alphabets.
///
/// The constructor is strict: it accepts only tensors that already satisfy
/// the internal invariants (entries >= 0, total within 1e-12 of 1, every x
/// with positive marginal). Untrusted input goes through make_joint(), which
/// clamps sub-1e-15 noise and renormalizes first.
class JointAXY {
 public:
  JointAXY(Tensor p, Alphabet a, Alphabet x, Alphabet y)
      : a_(std::move(a)), x_(std::move(x)), y_(std::move(y)), p_(std::move(p)) {
    a_.validate();
    x_.validate();
    y_.validate();
    if (p_.rank() != 3 || p_.shape[0] != a_.size || p_.shape[1] != x_.size ||
        p_.shape[2] != y_.size)
      throw BadParameter("joint tensor shape does not match alphabets");
    double sum = 0.0;
    for (double val : p_.v) {
      if (val < 0.0) throw NegativeMass("joint entry below zero");
      sum += val;
    }
    if (std::abs(sum - 1.0) > kNormTolInternal)
      throw NotNormalized("joint does not sum to 1 within 1e-12");
    for (std::size_t x_i = 0; x_i < x_.size; ++x_i) {
      double px = 0.0;
      for (std::size_t a_i = 0; a_i < a_.size; ++a_i)
        for (std::size_t y_i = 0; y_i < y_.size; ++y_i)
          px += p_.at(a_i, x_i, y_i);
      if (px <= 0.0)
        throw EmptySupport("P(x) = 0 for x index " + std::to_string(x_i));
    }
  }

  std::size_t na() const { return a_.size; }
  std::size_t nx() const { return x_.size; }
  std::size_t ny() const { return y_.size; }
  const Alphabet& alphabet_a() const { return a_; }
  const Alphabet& alphabet_x() const { return x_; }
  const Alphabet& alphabet_y() const { return y_; }
  const Tensor& tensor() const { return p_; }

  double p(std::size_t a, std::size_t x, std::size_t y) const {
    return p_.at(a, x, y);
  }

  std::vector<double> px() const {
    std::vector<double> m(nx(), 0.0);
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m[x] += p(a, x, y);
    return m;
  }

  std::vector<double> py() const {
    std::vector<double> m(ny(), 0.0);
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m[y] += p(a, x, y);
    return m;
  }

  std::vector<double> pa() const {
    std::vector<double> m(na(), 0.0);
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m[a] += p(a, x, y);
    return m;
  }

  Mat pxy() const {  // [x][y]
    Mat m(nx(), ny());
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m(x, y) += p(a, x, y);
    return m;
  }

  Mat pay() const {  // [a][y]
    Mat m(na(), ny());
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m(a, y) += p(a, x, y);
    return m;
  }

  Mat pax() const {  // [a][x]
    Mat m(na(), nx());
    for (std::size_t a = 0; a < na(); ++a)
      for (std::size_t x = 0; x < nx(); ++x)
        for (std::size_t y = 0; y < ny(); ++y) m(a, x) += p(a, x, y);
    return m;
  }

  /// Rows indexed by x; P(x) > 0 is guaranteed by construction.
  Mat y_given_x() const {
    Mat m = pxy();
    const auto mx = px();
    for (std::size_t x = 0; x < nx(); ++x)
      for (std::size_t y = 0; y < ny(); ++y) m(x, y) /= mx[x];
    return m;
  }

  Mat a_given_x() const {
    Mat pax_t = pax();
    Mat m(nx(), na());
    const auto mx = px();
    for (std::size_t x = 0; x < nx(); ++x)
      for (std::size_t a = 0; a < na(); ++a) m(x, a) = pax_t(a, x) / mx[x];
    return m;
  }

 private:
  Alphabet a_, x_, y_;
  Tensor p_;
};

/// Validates and cleans an untrusted probability tensor into a JointAXY:
/// entries below 1e-15 are clamped to zero and the tensor is renormalized
/// (skipped when it is already exact to keep construction idempotent).
inline JointAXY make_joint(Tensor p, Alphabet a, Alphabet x, Alphabet y) {
  if (p.rank() != 3 || p.shape[0] != a.size || p.shape[1] != x.size ||
      p.shape[2] != y.size)
    throw BadParameter("joint tensor shape does not match alphabets");
  double raw_sum = 0.0;
  for (double val : p.v) {
    if (val < kNegativeTol) throw NegativeMass("joint entry below -1e-12");
    raw_sum += val;
  }
  if (std::abs(raw_sum - 1.0) > kNormTolInput)
    throw NotNormalized("joint sums to " + std::to_string(raw_sum));
  bool clamped = false;
  double sum = 0.0;
  for (double& val : p.v) {
    if (val < kClampTol) {
      if (val != 0.0) clamped = true;
      val = 0.0;
    }
    sum += val;
  }
  if (sum <= 0.0) throw NotNormalized("joint has no mass after clamping");
  if (clamped || std::abs(sum - 1.0) > kNormTolInternal)
    for (double& val : p.v) val /= sum;
  return JointAXY(std::move(p), std::move(a), std::move(x), std::move(y));
}

inline JointAXY make_joint(
    const std::vector<std::vector<std::vector<double>>>& p, Alphabet a,
    Alphabet x, Alphabet y) {
  return make_joint(tensor3(p), std::move(a), std::move(x), std::move(y));
}

/// Conditional distribution Q(u|x): the solver's optimization variable.
/// Rows are accepted as-is when exact to 1e-12, renormalized when within
/// the 1e-9 input tolerance, rejected otherwise.
class Encoder {
 public:
  Encoder(Mat q, Alphabet x, Alphabet u)
      : q_(std::move(q)), x_(std::move(x)), u_(std::move(u)) {
    x_.validate();
    u_.validate();
    if (q_.rows != x_.size || q_.cols != u_.size)
      throw BadParameter("encoder shape does not match alphabets");
    for (std::size_t r = 0; r < q_.rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < q_.cols; ++c) {
        if (q_(r, c) < 0.0) throw NegativeMass("encoder entry below zero");
        sum += q_(r, c);
      }
      if (std::abs(sum - 1.0) <= kNormTolInternal) continue;
      if (std::abs(sum - 1.0) > kNormTolInput)
        throw NotNormalized("encoder row " + std::to_string(r) +
                            " sums to " + std::to_string(sum));
      for (std::size_t c = 0; c < q_.cols; ++c) q_(r, c) /= sum;
    }
  }

  std::size_t nx() const { return q_.rows; }
  std::size_t nu() const { return q_.cols; }
  const Alphabet& alphabet_x() const { return x_; }
  const Alphabet& alphabet_u() const { return u_; }
  const Mat& q() const { return q_; }
  double operator()(std::size_t x, std::size_t u) const { return q_(x, u); }

 private:
  Mat q_;
  Alphabet x_, u_;
};

/// Encoder with unlabeled alphabets taken from the matrix shape.
inline Encoder make_encoder(Mat q) {
  Alphabet x{q.rows, {}};
  Alphabet u{q.cols, {}};
  return Encoder(std::move(q), std::move(x), std::move(u));
}

/// Marginal R(U).
class Marginal {
 public:
  explicit Marginal(std::vector<double> r) : r_(std::move(r)) {
    if (r_.empty()) throw BadParameter("empty marginal");
    double sum = 0.0;
    for (double v : r_) {
      if (v < 0.0) throw NegativeMass("marginal entry below zero");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTolInternal)
      throw NotNormalized("marginal sums to " + std::to_string(sum));
  }

  std::size_t size() const { return r_.size(); }
  double operator[](std::size_t u) const { return r_[u]; }
  const std::vector<double>& values() const { return r_; }

 private:
  std::vector<double> r_;
};

/// Decoder S(Y|U). Rows for clusters whose marginal fell below the
/// dead-cluster threshold are uniform and flagged.
class Decoder {
 public:
  Decoder(Mat s, std::vector<std::uint8_t> dead)
      : s_(std::move(s)), dead_(std::move(dead)) {
    if (dead_.size() != s_.rows) throw BadParameter("decoder flag size");
    for (std::size_t r = 0; r < s_.rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < s_.cols; ++c) {
        if (s_(r, c) < 0.0) throw NegativeMass("decoder entry below zero");
        sum += s_(r, c);
      }
      if (std::abs(sum - 1.0) > kNormTolInternal)
        throw NotNormalized("decoder row " + std::to_string(r) +
                            " sums to " + std::to_string(sum));
    }
  }

  std::size_t nu() const { return s_.rows; }
  std::size_t ny() const { return s_.cols; }
  const Mat& s() const { return s_; }
  double operator()(std::size_t u, std::size_t y) const { return s_(u, y); }
  bool dead(std::size_t u) const { return dead_[u] != 0; }
  const std::vector<std::uint8_t>& dead_flags() const { return dead_; }

 private:
  Mat s_;
  std::vector<std::uint8_t> dead_;
};

/// Decoder with no dead rows flagged.
inline Decoder make_decoder(Mat s) {
  std::vector<std::uint8_t> dead(s.rows, 0);
  return Decoder(std::move(s), std::move(dead));
}

// --------------------------------------------------------------------------
// Generic marginalization / conditioning over (A, X, Y).

enum class Var { A, X, Y };

namespace detail {
inline void var_mask(const std::vector<Var>& vars, bool out[3]) {
  out[0] = out[1] = out[2] = false;
  for (Var v : vars) out[static_cast<std::size_t>(v)] = true;
}
}  // namespace detail

/// Sums out the dropped variables; kept variables appear in (A, X, Y) order.
inline Tensor marginal(const JointAXY& joint, const std::vector<Var>& vars) {
  if (vars.empty()) throw BadParameter("marginal: empty variable set");
  bool keep[3];
  detail::var_mask(vars, keep);
  const std::size_t dims[3] = {joint.na(), joint.nx(), joint.ny()};
  std::vector<std::size_t> shape;
  for (std::size_t d = 0; d < 3; ++d)
    if (keep[d]) shape.push_back(dims[d]);
  Tensor out(shape);
  for (std::size_t a = 0; a < joint.na(); ++a)
    for (std::size_t x = 0; x < joint.nx(); ++x)
      for (std::size_t y = 0; y < joint.ny(); ++y) {
        const std::size_t idx3[3] = {a, x, y};
        std::size_t flat = 0;
        for (std::size_t d = 0; d < 3; ++d)
          if (keep[d]) flat = flat * dims[d] + idx3[d];
        out.v[flat] += joint.p(a, x, y);
      }
  return out;
}

/// P(target | given), indexed [given...][target...], each given-row summing
/// to 1. Throws ConditionOnNull when a conditioning cell carries no mass.
inline Tensor conditional(const JointAXY& joint, const std::vector<Var>& target,
                          const std::vector<Var>& given) {
  if (target.empty() || given.empty())
    throw BadParameter("conditional: empty variable set");
  bool in_t[3], in_g[3];
  detail::var_mask(target, in_t);
  detail::var_mask(given, in_g);
  for (std::size_t d = 0; d < 3; ++d)
    if (in_t[d] && in_g[d])
      throw BadParameter("conditional: target and given overlap");
  const std::size_t dims[3] = {joint.na(), joint.nx(), joint.ny()};
  std::size_t gsize = 1, tsize = 1;
  std::vector<std::size_t> shape;
  for (std::size_t d = 0; d < 3; ++d)
    if (in_g[d]) {
      gsize *= dims[d];
      shape.push_back(dims[d]);
    }
  for (std::size_t d = 0; d < 3; ++d)
    if (in_t[d]) {
      tsize *= dims[d];
      shape.push_back(dims[d]);
    }

  std::vector<double> gmass(gsize, 0.0);
  Tensor out(shape);
  for (std::size_t a = 0; a < joint.na(); ++a)
    for (std::size_t x = 0; x < joint.nx(); ++x)
      for (std::size_t y = 0; y < joint.ny(); ++y) {
        const std::size_t idx3[3] = {a, x, y};
        std::size_t gi = 0, ti = 0;
        for (std::size_t d = 0; d < 3; ++d) {
          if (in_g[d]) gi = gi * dims[d] + idx3[d];
          if (in_t[d]) ti = ti * dims[d] + idx3[d];
        }
        gmass[gi] += joint.p(a, x, y);
        out.v[gi * tsize + ti] += joint.p(a, x, y);
      }
  for (std::size_t gi = 0; gi < gsize; ++gi) {
    if (gmass[gi] < kClampTol)
      throw ConditionOnNull("conditioning event has probability < 1e-15");
    for (std::size_t ti = 0; ti < tsize; ++ti) out.v[gi * tsize + ti] /= gmass[gi];
  }
  return out;
}

// --------------------------------------------------------------------------
// Distributions induced by attaching an encoder to the joint:
// P(a,x,y,u) = P(a,x,y) Q(u|x).

inline void check_encoder_joint(const JointAXY& joint, const Encoder& enc) {
  if (enc.nx() != joint.nx())
    throw BadParameter("encoder |X| does not match joint |X|");
}

inline Mat induced_xu(const JointAXY& joint, const Encoder& enc) {
  check_encoder_joint(joint, enc);
  const auto mx = joint.px();
  Mat m(joint.nx(), enc.nu());
  for (std::size_t x = 0; x < joint.nx(); ++x)
    for (std::size_t u = 0; u < enc.nu(); ++u) m(x, u) = mx[x] * enc(x, u);
  return m;
}

inline Tensor induced_auy(const JointAXY& joint, const Encoder& enc) {
  check_encoder_joint(joint, enc);
  Tensor t({joint.na(), enc.nu(), joint.ny()});
  for (std::size_t a = 0; a < joint.na(); ++a)
    for (std::size_t x = 0; x < joint.nx(); ++x)
      for (std::size_t y = 0; y < joint.ny(); ++y) {
        const double paxy = joint.p(a, x, y);
        if (paxy == 0.0) continue;
        for (std::size_t u = 0; u < enc.nu(); ++u)
          t.at(a, u, y) += paxy * enc(x, u);
      }
  return t;
}

inline Mat induced_uy(const JointAXY& joint, const Encoder& enc) {
  check_encoder_joint(joint, enc);
  const Mat pxy = joint.pxy();
  Mat m(enc.nu(), joint.ny());
  for (std::size_t x = 0; x < joint.nx(); ++x)
    for (std::size_t y = 0; y < joint.ny(); ++y) {
      const double w = pxy(x, y);
      if (w == 0.0) continue;
      for (std::size_t u = 0; u < enc.nu(); ++u) m(u, y) += w * enc(x, u);
    }
  return m;
}

}  // namespace fairib
