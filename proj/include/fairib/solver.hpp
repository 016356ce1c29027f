#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "fairib/distributions.hpp"
#include "fairib/errors.hpp"
#include "fairib/information.hpp"
#include "fairib/random.hpp"

namespace fairib {

struct SolverParams {
  double alpha = 1.0;          // weight of the compression term I(X;U)
  double beta = 0.0;           // weight of the fairness term I(A;U|Y)
  std::size_t u_size = 2;      // |U|
  double epsilon = 1e-8;       // termination threshold on |L_t - L_{t-1}|, nats
  std::size_t max_iters = 1000;
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  double dead_cluster_tol = 1e-12;

  void validate() const {
    if (!(alpha > 0.0)) throw BadParameter("alpha must be > 0");
    if (!(beta >= 0.0)) throw BadParameter("beta must be >= 0");
    if (u_size < 1) throw BadParameter("u_size must be >= 1");
    if (!(epsilon > 0.0)) throw BadParameter("epsilon must be > 0");
    if (max_iters < 1) throw BadParameter("max_iters must be >= 1");
    if (restarts < 1) throw BadParameter("restarts must be >= 1");
    if (!(dead_cluster_tol >= 0.0))
      throw BadParameter("dead_cluster_tol must be >= 0");
  }
};

/// The (Q, R, S) triple of one alternating-minimization run plus its
/// objective trajectory.
struct SolverState {
  Encoder q;
  Marginal r;
  Decoder s;
  std::vector<Nats> lagrangian_trace;
  std::size_t iter = 0;
};

struct FitMetrics {
  Nats i_xu;
  Nats i_auy;
  Nats i_uy;
  Nats lagrangian;
};

struct FitResult {
  Encoder encoder;
  FitMetrics metrics;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t restart_index = 0;
  double stationarity_residual = 0.0;
  std::vector<Nats> trace;
};

/// R(u) = sum_x Q(u|x) P(x).
inline Marginal update_marginal(const JointAXY& joint, const Encoder& enc) {
  check_encoder_joint(joint, enc);
  const auto px = joint.px();
  std::vector<double> r(enc.nu(), 0.0);
  for (std::size_t x = 0; x < enc.nx(); ++x)
    for (std::size_t u = 0; u < enc.nu(); ++u) r[u] += px[x] * enc(x, u);
  return Marginal(std::move(r));
}

/// S(y|u) = sum_x Q(u|x) P(x,y) / R(u); rows of clusters with R(u) below the
/// dead-cluster threshold are set uniform and flagged (they stay eligible
/// for revival by later encoder updates).
inline Decoder update_decoder(const JointAXY& joint, const Encoder& enc,
                              const Marginal& r,
                              double dead_cluster_tol = 1e-12) {
  check_encoder_joint(joint, enc);
  const Mat pxy = joint.pxy();
  Mat s(enc.nu(), joint.ny());
  std::vector<std::uint8_t> dead(enc.nu(), 0);
  for (std::size_t u = 0; u < enc.nu(); ++u) {
    if (r[u] < dead_cluster_tol) {
      dead[u] = 1;
      for (std::size_t y = 0; y < joint.ny(); ++y)
        s(u, y) = 1.0 / static_cast<double>(joint.ny());
      continue;
    }
    for (std::size_t x = 0; x < enc.nx(); ++x) {
      const double w = enc(x, u);
      if (w == 0.0) continue;
      for (std::size_t y = 0; y < joint.ny(); ++y) s(u, y) += w * pxy(x, y);
    }
    for (std::size_t y = 0; y < joint.ny(); ++y) s(u, y) /= r[u];
  }
  return Decoder(std::move(s), std::move(dead));
}

/// Exponents of the multiplicative encoder update, one per (x, u):
///
///   f(x,u) = (beta/alpha) sum_y P(y|x) D( P(A|x) || P(A|y,u) )
///          - (1/alpha) D( P(Y|x) || S(Y|u) )
///
/// where P(A|y,u) is induced by the current encoder. Entries may be +/-inf
/// when a KL term has a support violation; an infinite accuracy divergence
/// wins (the pairing gets zero weight).
inline Mat encoder_exponents(const JointAXY& joint, const SolverState& state,
                             const SolverParams& params) {
  check_encoder_joint(joint, state.q);
  const std::size_t nx = joint.nx(), ny = joint.ny(), na = joint.na();
  const std::size_t nu = state.q.nu();
  const Mat ygx = joint.y_given_x();
  const Mat agx = joint.a_given_x();

  Tensor pauy;
  Mat puy;
  if (params.beta > 0.0) {
    pauy = induced_auy(joint, state.q);
    puy = induced_uy(joint, state.q);
  }

  Mat f(nx, nu);
  std::vector<double> pa_cond(na);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < nu; ++u) {
      const Nats acc_kl = kl_divergence(ygx.row(x), state.s.s().row(u));
      if (acc_kl.infinite()) {
        f(x, u) = -std::numeric_limits<double>::infinity();
        continue;
      }
      double val = -acc_kl.value / params.alpha;
      if (params.beta > 0.0) {
        for (std::size_t y = 0; y < ny; ++y) {
          const double w = ygx(x, y);
          if (w == 0.0) continue;
          const double denom = puy(u, y);
          if (denom < params.dead_cluster_tol) {
            for (std::size_t a = 0; a < na; ++a)
              pa_cond[a] = 1.0 / static_cast<double>(na);
          } else {
            for (std::size_t a = 0; a < na; ++a)
              pa_cond[a] = pauy.at(a, u, y) / denom;
          }
          val += (params.beta / params.alpha) * w *
                 kl_divergence(agx.row(x), pa_cond).value;
        }
      }
      f(x, u) = val;
    }
  }
  return f;
}

/// Single entry of the update exponent.
inline double encoder_exponent(const JointAXY& joint, const SolverState& state,
                               const SolverParams& params, std::size_t x,
                               std::size_t u) {
  return encoder_exponents(joint, state, params)(x, u);
}

namespace detail {

// Max-shifted weights R(u) exp(f(x,u) - max_u f): the normalized encoder row
// is w / sum(w) and the true normalizer is exp(shift) * sum(w).
struct ShiftedWeights {
  std::vector<double> w;
  double shift = 0.0;
};

inline ShiftedWeights shifted_weights(std::span<const double> f_row,
                                      const Marginal& r) {
  const std::size_t n = f_row.size();
  ShiftedWeights out;
  out.w.assign(n, 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (double v : f_row) m = std::max(m, v);
  out.shift = m;
  if (std::isinf(m) && m < 0.0) return out;  // all exponents -inf
  if (std::isinf(m)) {
    for (std::size_t u = 0; u < n; ++u)
      if (std::isinf(f_row[u]) && f_row[u] > 0.0) out.w[u] = r[u];
  } else {
    for (std::size_t u = 0; u < n; ++u)
      out.w[u] = r[u] * std::exp(f_row[u] - m);
  }
  return out;
}

}  // namespace detail

/// Z(x) = sum_u R(u) exp(f(x,u)), computed with a max shift for overflow
/// safety. Throws DegenerateNormalizer when the shifted sum underflows to
/// zero (every cluster dead for this x).
inline double encoder_normalizer(const JointAXY& joint,
                                 const SolverState& state,
                                 const SolverParams& params, std::size_t x) {
  const Mat f = encoder_exponents(joint, state, params);
  const auto sw = detail::shifted_weights(f.row(x), state.r);
  double sum = 0.0;
  for (double w : sw.w) sum += w;
  if (sum <= 0.0)
    throw DegenerateNormalizer("encoder normalizer underflowed to 0");
  return std::exp(sw.shift) * sum;
}

/// Q'(u|x) = R(u) exp(f(x,u)) / Z(x); rows exactly normalized after the
/// max-shift trick.
inline Encoder update_encoder(const JointAXY& joint, const SolverState& state,
                              const SolverParams& params) {
  const Mat f = encoder_exponents(joint, state, params);
  Mat q(joint.nx(), state.q.nu());
  for (std::size_t x = 0; x < joint.nx(); ++x) {
    const auto sw = detail::shifted_weights(f.row(x), state.r);
    double sum = 0.0;
    for (double w : sw.w) sum += w;
    if (sum <= 0.0)
      throw DegenerateNormalizer("encoder normalizer underflowed to 0");
    for (std::size_t u = 0; u < state.q.nu(); ++u) q(x, u) = sw.w[u] / sum;
  }
  return Encoder(std::move(q), joint.alphabet_x(), state.q.alphabet_u());
}

/// Gradient of the Lagrangian with respect to each free Q(u|x), with R and S
/// collapsed to their update-formula values (the gradient of L as a function
/// of Q alone). Matches central finite differences of the objective entry by
/// entry; the x-only terms of the fixed-(R,S) partial derivatives cancel into
/// the row normalizer and are omitted. Entries with Q(u|x) = 0 are -inf.
inline Mat lagrangian_gradient(const JointAXY& joint, const Encoder& enc,
                               const SolverParams& params) {
  check_encoder_joint(joint, enc);
  params.validate();
  const std::size_t nx = joint.nx(), ny = joint.ny(), na = joint.na();
  const std::size_t nu = enc.nu();
  const auto px = joint.px();
  const auto py = joint.py();
  const Mat pxy = joint.pxy();
  const Mat pay = joint.pay();
  const Marginal r = update_marginal(joint, enc);
  const Mat puy = induced_uy(joint, enc);
  const Tensor pauy = induced_auy(joint, enc);

  Mat g(nx, nu);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < nu; ++u) {
      if (enc(x, u) == 0.0) {
        g(x, u) = -std::numeric_limits<double>::infinity();
        continue;
      }
      // d/dQ of I(X;U): P(x) log(Q(u|x)/R(u))
      double val = params.alpha * px[x] * std::log(enc(x, u) / r[u]);
      // d/dQ of I(A;U|Y): sum_{a,y} P(a,x,y) log( P(a|u,y) / P(a|y) )
      if (params.beta > 0.0) {
        double t2 = 0.0;
        for (std::size_t a = 0; a < na; ++a)
          for (std::size_t y = 0; y < ny; ++y) {
            const double w = joint.p(a, x, y);
            if (w == 0.0) continue;
            t2 += w * std::log(pauy.at(a, u, y) * py[y] /
                               (pay(a, y) * puy(u, y)));
          }
        val += params.beta * t2;
      }
      // d/dQ of I(U;Y): sum_y P(x,y) log( S(y|u) / P(y) )
      double t3 = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        const double w = pxy(x, y);
        if (w == 0.0) continue;
        t3 += w * std::log(puy(u, y) / (r[u] * py[y]));
      }
      g(x, u) = val - t3;
    }
  }
  return g;
}

/// Max over x of the row-wise projected-gradient max-norm: the row direction
/// normal to the simplex is removed by subtracting the Q-weighted row mean.
/// Entries at the boundary of the numerical support (Q below the dead-cluster
/// threshold) have a one-sided optimality condition and are excluded.
inline double stationarity_residual(const JointAXY& joint, const Encoder& enc,
                                    const SolverParams& params) {
  const Mat g = lagrangian_gradient(joint, enc, params);
  const double tol = params.dead_cluster_tol;
  double worst = 0.0;
  for (std::size_t x = 0; x < enc.nx(); ++x) {
    double mean = 0.0;
    for (std::size_t u = 0; u < enc.nu(); ++u)
      if (enc(x, u) > tol) mean += enc(x, u) * g(x, u);
    for (std::size_t u = 0; u < enc.nu(); ++u)
      if (enc(x, u) > tol) worst = std::max(worst, std::abs(g(x, u) - mean));
  }
  return worst;
}

namespace detail {

inline bool tail_non_increasing(const std::vector<Nats>& trace,
                                std::size_t window, double tol) {
  if (trace.size() < 2) return true;
  const std::size_t steps = std::min(window, trace.size() - 1);
  for (std::size_t i = trace.size() - steps; i < trace.size(); ++i)
    if (trace[i].value > trace[i - 1].value + tol) return false;
  return true;
}

struct RestartOutcome {
  std::optional<SolverState> state;  // empty when the restart degenerated
  bool converged = false;
};

inline RestartOutcome run_restart(const JointAXY& joint,
                                  const SolverParams& params,
                                  std::size_t restart_index) {
  Rng rng(substream_seed(params.seed, restart_index));
  Mat q0(joint.nx(), params.u_size);
  for (std::size_t x = 0; x < joint.nx(); ++x) {
    const auto row = dirichlet_row(rng, params.u_size);
    for (std::size_t u = 0; u < params.u_size; ++u) q0(x, u) = row[u];
  }
  Encoder q(std::move(q0), joint.alphabet_x(), Alphabet{params.u_size, {}});
  Marginal r = update_marginal(joint, q);
  Decoder s = update_decoder(joint, q, r, params.dead_cluster_tol);
  SolverState st{std::move(q), std::move(r), std::move(s), {}, 0};
  st.lagrangian_trace.push_back(
      lagrangian(joint, st.q, params.alpha, params.beta));

  RestartOutcome out;
  bool fired = false;
  try {
    for (std::size_t t = 1; t <= params.max_iters; ++t) {
      Encoder q1 = update_encoder(joint, st, params);
      Marginal r1 = update_marginal(joint, q1);
      Decoder s1 = update_decoder(joint, q1, r1, params.dead_cluster_tol);
      st.q = std::move(q1);
      st.r = std::move(r1);
      st.s = std::move(s1);
      st.iter = t;
      const Nats l = lagrangian(joint, st.q, params.alpha, params.beta);
      const Nats prev = st.lagrangian_trace.back();
      st.lagrangian_trace.push_back(l);
      if (std::abs(l.value - prev.value) < params.epsilon) {
        fired = true;
        break;
      }
    }
  } catch (const DegenerateNormalizer&) {
    return out;  // state left empty; caller decides whether everything died
  }
  out.converged =
      fired && tail_non_increasing(st.lagrangian_trace, 10, 1e-9);
  out.state = std::move(st);
  return out;
}

}  // namespace detail

/// Multi-restart alternating minimization of
/// alpha I(X;U) + beta I(A;U|Y) - I(U;Y) over the encoder. Each restart
/// starts from a seeded per-row Dirichlet(1) draw; the restart with the
/// smallest final objective wins, ties broken by restart index. Restarts are
/// independent and run on `jobs` threads; the reduce is deterministic, so the
/// result does not depend on the parallelism degree.
inline FitResult fit(const JointAXY& joint, const SolverParams& params,
                     std::size_t jobs = 1) {
  params.validate();
  std::vector<detail::RestartOutcome> outcomes(params.restarts);
  if (jobs <= 1 || params.restarts == 1) {
    for (std::size_t k = 0; k < params.restarts; ++k)
      outcomes[k] = detail::run_restart(joint, params, k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= params.restarts) return;
        try {
          outcomes[k] = detail::run_restart(joint, params, k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t n = std::min(jobs, params.restarts);
    pool.reserve(n);
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::optional<FitResult> best;
  bool any_completed = false;
  for (std::size_t k = 0; k < params.restarts; ++k) {
    if (!outcomes[k].state) continue;
    any_completed = true;
    SolverState& st = *outcomes[k].state;
    const double final_l = st.lagrangian_trace.back().value;
    if (best && final_l >= best->metrics.lagrangian.value) continue;
    FitResult res{std::move(st.q),
                  {},
                  outcomes[k].converged,
                  st.iter,
                  k,
                  0.0,
                  std::move(st.lagrangian_trace)};
    res.metrics.lagrangian = Nats{final_l};
    best = std::move(res);
  }
  if (!any_completed)
    throw DegenerateNormalizer("all restarts degenerated");

  // Recompute the metric bundle from the winning encoder.
  const Nats i_xu = mutual_information(induced_xu(joint, best->encoder));
  const Nats i_uy = mutual_information(induced_uy(joint, best->encoder));
  const Nats i_auy =
      conditional_mutual_information(induced_auy(joint, best->encoder));
  best->metrics = {i_xu, i_auy, i_uy,
                   Nats{params.alpha * i_xu.value +
                        params.beta * i_auy.value - i_uy.value}};
  best->stationarity_residual =
      stationarity_residual(joint, best->encoder, params);
  return *best;
}

}  // namespace fairib
