// fairib command-line tool: generate synthetic data, fit fair encoders,
// sweep the (alpha, beta) trade-off, and audit the resulting predictors.
//
// Exit codes: 0 success; 2 malformed input; 3 I/O failure;
// 10 fit finished but the best restart did not converge (result still
// written).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fairib/data.hpp"
#include "fairib/distributions.hpp"
#include "fairib/information.hpp"
#include "fairib/io.hpp"
#include "fairib/predictor.hpp"
#include "fairib/solver.hpp"

namespace {

using namespace fairib;

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;
constexpr int kExitNotConverged = 10;

struct InputOpts {
  std::string spec_path;
  std::string data_path;
  std::string alphabets;  // "na,nx,ny", required with --data
};

void add_input_options(CLI::App* cmd, InputOpts& in) {
  auto* spec = cmd->add_option("--spec", in.spec_path,
                               "generator spec JSON defining the exact joint");
  auto* data = cmd->add_option("--data", in.data_path,
                               "sample CSV (header a,x,y) for an empirical joint");
  cmd->add_option("--alphabets", in.alphabets,
                  "alphabet sizes na,nx,ny (required with --data)");
  spec->excludes(data);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string field =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw BadParameter("bad --alphabets field: '" + field + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

JointAXY load_joint(const InputOpts& in) {
  const bool has_spec = !in.spec_path.empty();
  const bool has_data = !in.data_path.empty();
  if (has_spec == has_data)
    throw BadParameter("exactly one of --spec or --data is required");
  if (has_spec) {
    if (!in.alphabets.empty())
      throw BadParameter("--alphabets is only valid with --data");
    return spec_to_joint(generator_spec_from_json(load_json_file(in.spec_path)));
  }
  if (in.alphabets.empty())
    throw BadParameter("--data requires --alphabets na,nx,ny");
  const auto sizes = parse_sizes(in.alphabets);
  if (sizes.size() != 3)
    throw BadParameter("--alphabets must list exactly three sizes");
  return empirical_joint(load_samples_csv(in.data_path), Alphabet{sizes[0], {}},
                         Alphabet{sizes[1], {}}, Alphabet{sizes[2], {}});
}

double display(double nats, bool bits) {
  return bits ? nats / std::log(2.0) : nats;
}

struct Evaluation {
  DecisionRule rule;
  double risk = 0.0;
  bool hamming = false;
  OddsAudit audit{Nats{0.0}, 0.0};
};

Evaluation evaluate_encoder(const JointAXY& joint, const Encoder& enc,
                            const LossMatrix& loss) {
  Evaluation ev;
  ev.rule = bayes_rule(joint, enc, loss);
  ev.risk = bayes_risk(joint, enc, ev.rule, loss);
  ev.hamming = loss.is_hamming();
  ev.audit = equalized_odds_gap(joint, enc, ev.rule);
  return ev;
}

int cmd_generate(const std::string& spec_path, std::size_t n,
                 std::uint64_t seed, const std::string& out_path) {
  const GeneratorSpec spec =
      generator_spec_from_json(load_json_file(spec_path));
  const SampleTable table = sample(spec, n, seed);
  write_text_file(out_path, samples_to_csv(table));
  std::cerr << "generate: wrote " << table.n() << " samples to " << out_path
            << "\n";
  return kExitOk;
}

int cmd_fit(const InputOpts& in, const std::string& params_path,
            const std::optional<std::uint64_t>& seed_override,
            const std::string& out_path, unsigned jobs, bool bits) {
  const JointAXY joint = load_joint(in);
  SolverParams params = solver_params_from_json(load_json_file(params_path));
  if (seed_override) params.seed = *seed_override;
  const FitResult result = fit(joint, params, jobs);
  write_json_file(out_path, to_json(result));
  const char* unit = bits ? "bits" : "nats";
  std::cerr << "fit: L=" << display(result.metrics.lagrangian.value, bits)
            << " " << unit
            << " i_xu=" << display(result.metrics.i_xu.value, bits)
            << " i_auy=" << display(result.metrics.i_auy.value, bits)
            << " i_uy=" << display(result.metrics.i_uy.value, bits)
            << " converged=" << (result.converged ? "true" : "false")
            << " iterations=" << result.iterations << " -> " << out_path
            << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

struct SweepRow {
  double alpha, beta;
  FitMetrics metrics;
  double accuracy, eo_cmi, eo_gap;
  bool converged;
};

int cmd_sweep(const InputOpts& in, const std::string& grid_path,
              const std::optional<std::uint64_t>& seed_override,
              const std::string& out_path, unsigned jobs, bool bits) {
  const JointAXY joint = load_joint(in);
  SweepGrid grid = sweep_grid_from_json(load_json_file(grid_path));
  if (seed_override) grid.base.seed = *seed_override;

  std::vector<std::pair<double, double>> points;
  for (double a : grid.alphas)
    for (double b : grid.betas) points.emplace_back(a, b);
  std::sort(points.begin(), points.end());

  const LossMatrix hamming = LossMatrix::hamming(joint.ny());
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        SolverParams params = grid.base;
        params.alpha = points[i].first;
        params.beta = points[i].second;
        const FitResult result = fit(joint, params);
        const Evaluation ev = evaluate_encoder(joint, result.encoder, hamming);
        rows[i] = {params.alpha,       params.beta,     result.metrics,
                   1.0 - ev.risk,      ev.audit.cmi.value,
                   ev.audit.max_rate_gap, result.converged};
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "sweep: alpha=" << params.alpha
                  << " beta=" << params.beta << " L="
                  << display(result.metrics.lagrangian.value, bits)
                  << (bits ? " bits" : " nats")
                  << " converged=" << (result.converged ? "true" : "false")
                  << "\n";
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(jobs, points.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string csv =
      "alpha,beta,i_xu,i_auy,i_uy,lagrangian,accuracy,eo_cmi,eo_gap,converged\n";
  for (const SweepRow& r : rows) {
    csv += format_g17(r.alpha) + "," + format_g17(r.beta) + "," +
           format_g17(r.metrics.i_xu.value) + "," +
           format_g17(r.metrics.i_auy.value) + "," +
           format_g17(r.metrics.i_uy.value) + "," +
           format_g17(r.metrics.lagrangian.value) + "," +
           format_g17(r.accuracy) + "," + format_g17(r.eo_cmi) + "," +
           format_g17(r.eo_gap) + "," + (r.converged ? "1" : "0") + "\n";
  }
  write_text_file(out_path, csv);
  std::cerr << "sweep: wrote " << rows.size() << " rows to " << out_path
            << "\n";
  return kExitOk;
}

int cmd_evaluate(const InputOpts& in, const std::string& fit_path,
                 const std::string& loss_path, const std::string& out_path,
                 bool bits) {
  const JointAXY joint = load_joint(in);
  const json fit_json = load_json_file(fit_path);
  const Encoder enc = encoder_from_json(fit_json.at("encoder"));
  const LossMatrix loss = loss_path.empty()
                              ? LossMatrix::hamming(joint.ny())
                              : loss_matrix_from_json(load_json_file(loss_path));
  const Evaluation ev = evaluate_encoder(joint, enc, loss);

  json out{{"bayes_risk", ev.risk},
           {"eo_cmi", ev.audit.cmi.value},
           {"eo_gap", ev.audit.max_rate_gap},
           {"rule", ev.rule.y_for_u}};
  if (ev.hamming) out["accuracy"] = 1.0 - ev.risk;
  write_json_file(out_path, out);
  std::cerr << "evaluate: risk=" << ev.risk
            << " eo_cmi=" << display(ev.audit.cmi.value, bits)
            << (bits ? " bits" : " nats") << " eo_gap=" << ev.audit.max_rate_gap
            << " -> " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair representation learning: compress X into U under an "
               "equalized-odds penalty, predict Y from U, audit the result"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a CSV from a generator spec");
  std::string gen_spec, gen_out;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  gen->add_option("--spec", gen_spec, "generator spec JSON")->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--seed", gen_seed, "RNG seed (default 0)");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit an encoder by alternating minimization");
  InputOpts fit_in;
  std::string fit_params, fit_out;
  std::optional<std::uint64_t> fit_seed;
  unsigned fit_jobs = 1;
  bool fit_bits = false;
  add_input_options(fit_cmd, fit_in);
  fit_cmd->add_option("--params", fit_params, "solver params JSON")->required();
  fit_cmd->add_option("--seed", fit_seed, "override the seed in --params");
  fit_cmd->add_option("--out", fit_out, "output fit JSON path")->required();
  fit_cmd->add_option("--jobs", fit_jobs, "parallel restart workers (default 1)")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--bits", fit_bits, "display information in bits (files stay in nats)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "fit every (alpha, beta) grid point");
  InputOpts sweep_in;
  std::string sweep_grid, sweep_out;
  std::optional<std::uint64_t> sweep_seed;
  unsigned sweep_jobs = 1;
  bool sweep_bits = false;
  add_input_options(sweep_cmd, sweep_in);
  sweep_cmd->add_option("--grid", sweep_grid, "sweep grid JSON")->required();
  sweep_cmd->add_option("--seed", sweep_seed, "override the seed in --grid");
  sweep_cmd->add_option("--out", sweep_out, "output CSV path")->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "parallel grid workers (default 1)")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--bits", sweep_bits, "display information in bits");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "audit a fitted encoder");
  InputOpts eval_in;
  std::string eval_fit, eval_loss, eval_out;
  bool eval_bits = false;
  add_input_options(eval_cmd, eval_in);
  eval_cmd->add_option("--fit", eval_fit, "fit JSON produced by the fit command")
      ->required();
  eval_cmd->add_option("--loss", eval_loss, "loss matrix JSON (default Hamming)");
  eval_cmd->add_option("--out", eval_out, "output JSON path")->required();
  eval_cmd->add_flag("--bits", eval_bits, "display information in bits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_spec, gen_n, gen_seed, gen_out);
    if (fit_cmd->parsed())
      return cmd_fit(fit_in, fit_params, fit_seed, fit_out, fit_jobs, fit_bits);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_in, sweep_grid, sweep_seed, sweep_out, sweep_jobs,
                       sweep_bits);
    if (eval_cmd->parsed())
      return cmd_evaluate(eval_in, eval_fit, eval_loss, eval_out, eval_bits);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitBadInput;
}
