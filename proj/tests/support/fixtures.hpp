#pragma once

#include <cstdint>

#include "fairib/data.hpp"
#include "fairib/distributions.hpp"
#include "fairib/random.hpp"

namespace fairib_test {

using namespace fairib;

/// The pinned synthetic instance used across the suite: |A|=2, |X|=4, |Y|=2,
/// A and X correlated, A and Y dependent only through X.
inline GeneratorSpec reference_instance() {
  GeneratorSpec s;
  s.p_a = {0.5, 0.5};
  s.p_x_given_a = Mat(2, 4);
  const double xa0[4] = {0.4, 0.3, 0.2, 0.1};
  const double xa1[4] = {0.1, 0.2, 0.3, 0.4};
  for (std::size_t x = 0; x < 4; ++x) {
    s.p_x_given_a(0, x) = xa0[x];
    s.p_x_given_a(1, x) = xa1[x];
  }
  s.p_y_given_x = Mat(4, 2);
  const double y1[4] = {0.1, 0.4, 0.6, 0.9};
  for (std::size_t x = 0; x < 4; ++x) {
    s.p_y_given_x(x, 0) = 1.0 - y1[x];
    s.p_y_given_x(x, 1) = y1[x];
  }
  return s;
}

inline JointAXY reference_joint() { return spec_to_joint(reference_instance()); }

/// Small binary instance for brute-force encoder searches.
inline GeneratorSpec tiny_instance() {
  GeneratorSpec s;
  s.p_a = {0.6, 0.4};
  s.p_x_given_a = Mat(2, 2);
  s.p_x_given_a(0, 0) = 0.7;
  s.p_x_given_a(0, 1) = 0.3;
  s.p_x_given_a(1, 0) = 0.2;
  s.p_x_given_a(1, 1) = 0.8;
  s.p_y_given_x = Mat(2, 2);
  s.p_y_given_x(0, 0) = 0.8;
  s.p_y_given_x(0, 1) = 0.2;
  s.p_y_given_x(1, 0) = 0.3;
  s.p_y_given_x(1, 1) = 0.7;
  return s;
}

/// Fully independent uniform instance: every conditional coincides with the
/// matching marginal.
inline GeneratorSpec independent_uniform_instance(std::size_t na,
                                                  std::size_t nx,
                                                  std::size_t ny) {
  GeneratorSpec s;
  s.p_a.assign(na, 1.0 / static_cast<double>(na));
  s.p_x_given_a = Mat(na, nx, 1.0 / static_cast<double>(nx));
  s.p_y_given_x = Mat(nx, ny, 1.0 / static_cast<double>(ny));
  return s;
}

/// Dirichlet(1) rows drawn from the given stream.
inline Mat seeded_rows(std::uint64_t seed, std::uint64_t stream,
                       std::size_t rows, std::size_t cols) {
  Rng rng(substream_seed(seed, stream));
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = dirichlet_row(rng, cols);
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

/// Interior encoder: Dirichlet rows mixed with the uniform row, so every
/// entry is at least 0.2 / cols.
inline Mat random_interior_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = dirichlet_row(rng, cols);
    for (std::size_t c = 0; c < cols; ++c)
      m(r, c) = 0.8 * row[c] + 0.2 / static_cast<double>(cols);
  }
  return m;
}

/// Random full-support joint with no conditional-independence structure.
inline JointAXY random_joint(Rng& rng, std::size_t na, std::size_t nx,
                             std::size_t ny) {
  Tensor t({na, nx, ny});
  double sum = 0.0;
  for (auto& v : t.v) {
    v = 0.05 + rng.uniform();
    sum += v;
  }
  for (auto& v : t.v) v /= sum;
  return make_joint(std::move(t), Alphabet{na, {}}, Alphabet{nx, {}},
                    Alphabet{ny, {}});
}

/// Random generator spec (full support), hence A independent of Y given X.
inline GeneratorSpec random_model_spec(Rng& rng, std::size_t na,
                                       std::size_t nx, std::size_t ny) {
  GeneratorSpec s;
  s.p_a.resize(na);
  double sum = 0.0;
  for (auto& v : s.p_a) {
    v = 0.1 + rng.uniform();
    sum += v;
  }
  for (auto& v : s.p_a) v /= sum;
  s.p_x_given_a = Mat(na, nx);
  for (std::size_t a = 0; a < na; ++a) {
    double rs = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      s.p_x_given_a(a, x) = 0.1 + rng.uniform();
      rs += s.p_x_given_a(a, x);
    }
    for (std::size_t x = 0; x < nx; ++x) s.p_x_given_a(a, x) /= rs;
  }
  s.p_y_given_x = Mat(nx, ny);
  for (std::size_t x = 0; x < nx; ++x) {
    double rs = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      s.p_y_given_x(x, y) = 0.1 + rng.uniform();
      rs += s.p_y_given_x(x, y);
    }
    for (std::size_t y = 0; y < ny; ++y) s.p_y_given_x(x, y) /= rs;
  }
  return s;
}

}  // namespace fairib_test
