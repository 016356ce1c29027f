#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairib/distributions.hpp"
#include "fairib/errors.hpp"
#include "fairib/random.hpp"

namespace fairib {

/// Ground-truth generator P(a) P(x|a) P(y|x); by construction A is
/// independent of Y given X.
struct GeneratorSpec {
  std::vector<double> p_a;
  Mat p_x_given_a;  // rows a
  Mat p_y_given_x;  // rows x

  std::size_t na() const { return p_a.size(); }
  std::size_t nx() const { return p_x_given_a.cols; }
  std::size_t ny() const { return p_y_given_x.cols; }

  void validate() const {
    if (p_a.empty()) throw BadParameter("p_a must be non-empty");
    if (p_x_given_a.rows != p_a.size() || p_x_given_a.cols < 1)
      throw BadParameter("p_x_given_a shape does not match p_a");
    if (p_y_given_x.rows != p_x_given_a.cols || p_y_given_x.cols < 1)
      throw BadParameter("p_y_given_x shape does not match p_x_given_a");
    check_pmf(p_a, "p_a");
    for (std::size_t a = 0; a < p_x_given_a.rows; ++a)
      check_pmf(p_x_given_a.row(a), "p_x_given_a row " + std::to_string(a));
    for (std::size_t x = 0; x < p_y_given_x.rows; ++x)
      check_pmf(p_y_given_x.row(x), "p_y_given_x row " + std::to_string(x));
  }

 private:
  static void check_pmf(std::span<const double> p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) throw NegativeMass(what + ": negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTolInput)
      throw NotNormalized(what + " sums to " + std::to_string(sum));
  }
};

/// Integer-coded (a, x, y) observations.
struct SampleTable {
  struct Row {
    std::size_t a, x, y;
  };
  std::vector<Row> rows;

  std::size_t n() const { return rows.size(); }
};

/// Exact joint P(a,x,y) = P(a) P(x|a) P(y|x).
inline JointAXY spec_to_joint(const GeneratorSpec& spec) {
  spec.validate();
  Tensor t({spec.na(), spec.nx(), spec.ny()});
  for (std::size_t a = 0; a < spec.na(); ++a)
    for (std::size_t x = 0; x < spec.nx(); ++x)
      for (std::size_t y = 0; y < spec.ny(); ++y)
        t.at(a, x, y) =
            spec.p_a[a] * spec.p_x_given_a(a, x) * spec.p_y_given_x(x, y);
  return make_joint(std::move(t), Alphabet{spec.na(), {}},
                    Alphabet{spec.nx(), {}}, Alphabet{spec.ny(), {}});
}

/// Seeded i.i.d. ancestral sampling A -> X -> Y; deterministic per seed.
inline SampleTable sample(const GeneratorSpec& spec, std::size_t n,
                          std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw BadParameter("sample: n must be >= 1");
  Rng rng(seed);
  SampleTable table;
  table.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = sample_index(rng, spec.p_a);
    const std::size_t x = sample_index(rng, spec.p_x_given_a.row(a));
    const std::size_t y = sample_index(rng, spec.p_y_given_x.row(x));
    table.rows.push_back({a, x, y});
  }
  return table;
}

/// Empirical joint: counts divided once by n. Alphabets are declared, never
/// inferred; an x symbol with no observations raises EmptySupport.
inline JointAXY empirical_joint(const SampleTable& table, Alphabet a,
                                Alphabet x, Alphabet y) {
  a.validate();
  x.validate();
  y.validate();
  if (table.n() < 1) throw BadParameter("empirical_joint: empty table");
  Tensor counts({a.size, x.size, y.size});
  for (const auto& row : table.rows) {
    if (row.a >= a.size || row.x >= x.size || row.y >= y.size)
      throw BadParameter("sample index outside the declared alphabets");
    counts.at(row.a, row.x, row.y) += 1.0;
  }
  const double n = static_cast<double>(table.n());
  for (double& v : counts.v) v /= n;
  return make_joint(std::move(counts), std::move(a), std::move(x),
                    std::move(y));
}

}  // namespace fairib
