#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairib/data.hpp"
#include "fairib/distributions.hpp"
#include "fairib/errors.hpp"
#include "fairib/solver.hpp"
#include "fairib/predictor.hpp"

namespace fairib {

using json = nlohmann::json;

/// Grid of (alpha, beta) points sharing one set of solver parameters.
struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  SolverParams base;  // alpha/beta ignored; filled per grid point

  void validate() const {
    if (alphas.empty()) throw BadParameter("alphas must be non-empty");
    if (betas.empty()) throw BadParameter("betas must be non-empty");
    for (double a : alphas)
      if (!(a > 0.0)) throw BadParameter("all alphas must be > 0");
    for (double b : betas)
      if (!(b >= 0.0)) throw BadParameter("all betas must be >= 0");
    SolverParams probe = base;
    probe.alpha = alphas.front();
    probe.beta = betas.front();
    probe.validate();
  }
};

// ---------------------------------------------------------------------------
// JSON conversions. Field names follow the documented file formats exactly.

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw BadParameter("expected a non-empty 2-d array");
  Mat m(j.size(), j[0].size());
  for (std::size_t r = 0; r < m.rows; ++r) {
    if (!j[r].is_array() || j[r].size() != m.cols)
      throw BadParameter("ragged 2-d array");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json to_json(const GeneratorSpec& spec) {
  return json{{"p_a", spec.p_a},
              {"p_x_given_a", to_json(spec.p_x_given_a)},
              {"p_y_given_x", to_json(spec.p_y_given_x)}};
}

inline GeneratorSpec generator_spec_from_json(const json& j) {
  GeneratorSpec spec;
  spec.p_a = j.at("p_a").get<std::vector<double>>();
  spec.p_x_given_a = mat_from_json(j.at("p_x_given_a"));
  spec.p_y_given_x = mat_from_json(j.at("p_y_given_x"));
  spec.validate();
  return spec;
}

inline json to_json(const SolverParams& p) {
  return json{{"alpha", p.alpha},
              {"beta", p.beta},
              {"u_size", p.u_size},
              {"epsilon", p.epsilon},
              {"max_iters", p.max_iters},
              {"restarts", p.restarts},
              {"seed", p.seed},
              {"dead_cluster_tol", p.dead_cluster_tol}};
}

inline SolverParams solver_params_from_json(const json& j) {
  SolverParams p;
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.u_size = j.at("u_size").get<std::size_t>();
  p.epsilon = j.at("epsilon").get<double>();
  p.max_iters = j.at("max_iters").get<std::size_t>();
  p.restarts = j.at("restarts").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.dead_cluster_tol = j.value("dead_cluster_tol", 1e-12);
  p.validate();
  return p;
}

inline json to_json(const LossMatrix& loss) {
  return json{{"ell", to_json(loss.ell)}};
}

inline LossMatrix loss_matrix_from_json(const json& j) {
  LossMatrix loss{mat_from_json(j.at("ell"))};
  loss.validate();
  return loss;
}

inline json to_json(const SweepGrid& grid) {
  json j = to_json(grid.base);
  j.erase("alpha");
  j.erase("beta");
  j["alphas"] = grid.alphas;
  j["betas"] = grid.betas;
  return j;
}

inline SweepGrid sweep_grid_from_json(const json& j) {
  SweepGrid grid;
  grid.alphas = j.at("alphas").get<std::vector<double>>();
  grid.betas = j.at("betas").get<std::vector<double>>();
  grid.base.u_size = j.at("u_size").get<std::size_t>();
  grid.base.epsilon = j.at("epsilon").get<double>();
  grid.base.max_iters = j.at("max_iters").get<std::size_t>();
  grid.base.restarts = j.at("restarts").get<std::size_t>();
  grid.base.seed = j.at("seed").get<std::uint64_t>();
  grid.base.dead_cluster_tol = j.value("dead_cluster_tol", 1e-12);
  grid.validate();
  return grid;
}

inline json to_json(const Encoder& enc) { return to_json(enc.q()); }

inline Encoder encoder_from_json(const json& j) {
  return make_encoder(mat_from_json(j));
}

inline json to_json(const JointAXY& joint) {
  json out = json::array();
  for (std::size_t a = 0; a < joint.na(); ++a) {
    json xs = json::array();
    for (std::size_t x = 0; x < joint.nx(); ++x) {
      json ys = json::array();
      for (std::size_t y = 0; y < joint.ny(); ++y)
        ys.push_back(joint.p(a, x, y));
      xs.push_back(std::move(ys));
    }
    out.push_back(std::move(xs));
  }
  return json{{"p", std::move(out)}};
}

/// Strict reload of a serialized joint: values are stored as-is (no clamping
/// or renormalization) so the round trip is bit-exact.
inline JointAXY joint_from_json(const json& j) {
  const json& p = j.at("p");
  if (!p.is_array() || p.empty()) throw BadParameter("expected a 3-d array");
  const std::size_t na = p.size();
  const std::size_t nx = p[0].size();
  if (nx == 0) throw BadParameter("expected a 3-d array");
  const std::size_t ny = p[0][0].size();
  Tensor t({na, nx, ny});
  for (std::size_t a = 0; a < na; ++a) {
    if (p[a].size() != nx) throw BadParameter("ragged 3-d array");
    for (std::size_t x = 0; x < nx; ++x) {
      if (p[a][x].size() != ny) throw BadParameter("ragged 3-d array");
      for (std::size_t y = 0; y < ny; ++y)
        t.at(a, x, y) = p[a][x][y].get<double>();
    }
  }
  return JointAXY(std::move(t), Alphabet{na, {}}, Alphabet{nx, {}},
                  Alphabet{ny, {}});
}

inline json to_json(const FitResult& fit) {
  json trace = json::array();
  for (const Nats& l : fit.trace) trace.push_back(l.value);
  return json{{"encoder", to_json(fit.encoder)},
              {"metrics",
               {{"i_xu", fit.metrics.i_xu.value},
                {"i_auy", fit.metrics.i_auy.value},
                {"i_uy", fit.metrics.i_uy.value},
                {"lagrangian", fit.metrics.lagrangian.value}}},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"restart_index", fit.restart_index},
              {"stationarity_residual", fit.stationarity_residual},
              {"trace", std::move(trace)}};
}

inline FitResult fit_result_from_json(const json& j) {
  FitResult fit{encoder_from_json(j.at("encoder")),
                {},
                j.at("converged").get<bool>(),
                j.at("iterations").get<std::size_t>(),
                j.at("restart_index").get<std::size_t>(),
                j.at("stationarity_residual").get<double>(),
                {}};
  const json& m = j.at("metrics");
  fit.metrics.i_xu = Nats{m.at("i_xu").get<double>()};
  fit.metrics.i_auy = Nats{m.at("i_auy").get<double>()};
  fit.metrics.i_uy = Nats{m.at("i_uy").get<double>()};
  fit.metrics.lagrangian = Nats{m.at("lagrangian").get<double>()};
  for (const json& l : j.at("trace"))
    fit.trace.push_back(Nats{l.get<double>()});
  return fit;
}

// ---------------------------------------------------------------------------
// Files.

inline json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return json::parse(buf.str());
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("cannot write " + path);
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Sample CSV: header "a,x,y", one integer-coded triple per row, LF endings.

inline std::string samples_to_csv(const SampleTable& table) {
  std::string out = "a,x,y\n";
  char buf[64];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu\n", row.a, row.x, row.y);
    out += buf;
  }
  return out;
}

inline SampleTable samples_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw BadParameter("empty sample CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "a,x,y")
    throw BadParameter("sample CSV must start with header 'a,x,y'");
  SampleTable table;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t vals[3];
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k) {
      std::size_t comma = (k < 2) ? line.find(',', pos) : line.size();
      if (comma == std::string::npos)
        throw BadParameter("malformed sample CSV row: " + line);
      const std::string field = line.substr(pos, comma - pos);
      try {
        std::size_t used = 0;
        vals[k] = std::stoull(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw BadParameter("malformed sample CSV field: '" + field + "'");
      }
      pos = comma + 1;
    }
    table.rows.push_back({vals[0], vals[1], vals[2]});
  }
  return table;
}

inline SampleTable load_samples_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return samples_from_csv(in);
}

/// 17-significant-digit decimal formatting; round-trips doubles exactly.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fairib
