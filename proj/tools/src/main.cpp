// Command-line front end for the streaming loss estimator.
//
//   oeuvre run <config>              run an experiment, write traces + summary
//   oeuvre sweep <config> <kind>     hindsight hyperparameter sweep
//   oeuvre stream [flags]            attach the estimator to an external loss CSV
//   oeuvre coverage <config>         Monte Carlo confidence-bound coverage
//
// Standard output carries only data (JSON or CSV); all logs and warnings go
// to standard error. Exit codes: 0 success, 2 usage/config error, 3 I/O
// error; stream mode exits 1 when rows had to be skipped.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oeuvre/csv.hpp"
#include "oeuvre/harness.hpp"

namespace {

using namespace oeuvre;

void log_error(const std::string& message) {
  std::cerr << "{\"error\": \"" << message << "\"}\n";
}

// Config problems (unreadable path included, per the error contract) map to
// exit 2; later I/O problems map to exit 3.
ExperimentConfig load_config_or_exit2(const std::string& path) {
  try {
    return load_experiment_config(path);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

std::string resolve_output_dir(const std::string& flag_value,
                               const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("OEUVRE_OUTPUT_DIR"); env && *env) {
    return env;
  }
  return config_value;
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  ExperimentConfig cfg = load_config_or_exit2(config_path);
  cfg.output_dir = resolve_output_dir(output_dir, cfg.output_dir);
  std::cerr << "run: task=" << cfg.task.kind << " horizon=" << cfg.horizon
            << " seeds=" << cfg.seeds.size() << "\n";
  const RunResult result = run_experiment(cfg);
  if (cfg.write_traces) {
    std::cerr << "run: wrote " << result.traces.size() << " trace file(s) to "
              << cfg.output_dir << "\n";
  }
  std::cout << render_summary_json(cfg, result);
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& kind_name) {
  ExperimentConfig cfg = load_config_or_exit2(config_path);
  const BaselineKind kind = baseline_kind_from_string(kind_name);
  std::cerr << "sweep: task=" << cfg.task.kind << " kind=" << kind_name << "\n";
  const SweepResult result = sweep_baseline(cfg, kind);
  std::cout << render_sweep_json(cfg, result);
  return 0;
}

int cmd_coverage(const std::string& config_path) {
  ExperimentConfig cfg = load_config_or_exit2(config_path);
  std::cerr << "coverage: task=" << cfg.task.kind
            << " replications=" << cfg.coverage.replications << "\n";
  const CoverageResult result = coverage_study(cfg);
  std::cout << render_coverage_json(cfg, result);
  return 0;
}

struct StreamOptions {
  std::string input;  // empty = standard input
  std::string sigma_kind = "inverse_sqrt_t";
  double eta0 = 1.0;
  std::optional<double> b_hat;
  std::optional<double> c_hat;
  bool adaptive = false;
  std::optional<std::int64_t> burn_in;
  std::optional<double> delta;
  std::string weight_mode = "optimal";
  double kappa = 1.0;
};

// One estimator over an externally produced loss stream, O(1) memory:
// rows are consumed, scored, and printed one at a time.
int cmd_stream(const StreamOptions& opt) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!opt.input.empty()) {
    file.open(opt.input);
    if (!file) {
      throw std::runtime_error("stream: cannot open '" + opt.input + "'");
    }
    in = &file;
  }

  EstimatorConfig ecfg;
  if (opt.weight_mode == "optimal") {
    ecfg.policy.mode = WeightMode::optimal;
  } else if (opt.weight_mode == "rate_constrained") {
    ecfg.policy.mode = WeightMode::rate_constrained;
  } else {
    throw std::invalid_argument("stream: unknown weight mode '" +
                                opt.weight_mode + "'");
  }
  ecfg.policy.kappa = opt.kappa;
  if (opt.adaptive) {
    // Estimate both constants from the burn-in prefix; explicit flags
    // become the priors used while the estimates are still forming.
    if (opt.b_hat) ecfg.b_prior = *opt.b_hat;
    if (opt.c_hat) ecfg.c_prior = *opt.c_hat;
    ecfg.burn_in = opt.burn_in.value_or(30);
  } else {
    ecfg.b_hat = opt.b_hat;
    ecfg.c_hat = opt.c_hat;
    const bool both = opt.b_hat && opt.c_hat;
    ecfg.burn_in = opt.burn_in.value_or(both ? 0 : 30);
  }
  if (opt.delta && !(*opt.delta > 0.0 && *opt.delta < 1.0)) {
    throw std::invalid_argument("stream: --delta must be in (0,1)");
  }

  StabilitySchedule sched;
  sched.kind = rate_kind_from_string(opt.sigma_kind);
  if (sched.kind == RateKind::custom_table) {
    throw std::invalid_argument(
        "stream: use a per-row sigma column instead of a custom table");
  }
  sched.eta0 = opt.eta0;
  Estimator est(ecfg);

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  int col_t = -1, col_curr = -1, col_prev = -1, col_sigma = -1;
  std::int64_t last_t = 0;
  bool saw_row = false;
  std::int64_t skipped = 0;

  const auto warn_skip = [&](const std::string& why) {
    std::cerr << "stream: skipping line " << line_no << ": " << why << "\n";
    ++skipped;
  };

  while (std::getline(*in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split_record(line);
    if (!fields) {
      if (!have_header) {
        throw std::invalid_argument("stream: malformed header row");
      }
      warn_skip("unterminated quote");
      continue;
    }
    if (!have_header) {
      for (std::size_t i = 0; i < fields->size(); ++i) {
        const auto& name = (*fields)[i];
        if (name == "t") {
          col_t = static_cast<int>(i);
        } else if (name == "loss_curr") {
          col_curr = static_cast<int>(i);
        } else if (name == "loss_prev") {
          col_prev = static_cast<int>(i);
        } else if (name == "sigma") {
          col_sigma = static_cast<int>(i);
        } else {
          throw std::invalid_argument("stream: unknown column '" + name + "'");
        }
      }
      if (col_t < 0 || col_curr < 0 || col_prev < 0) {
        throw std::invalid_argument(
            "stream: header must name columns t, loss_curr, loss_prev");
      }
      have_header = true;
      std::cout << (opt.delta ? "t,estimate,half_width" : "t,estimate") << "\n";
      continue;
    }

    if (fields->size() <= static_cast<std::size_t>(
                              std::max(col_prev, std::max(col_t, col_curr)))) {
      warn_skip("too few fields");
      continue;
    }
    const auto t_val = csv::parse_double((*fields)[static_cast<std::size_t>(col_t)]);
    const auto curr =
        csv::parse_double((*fields)[static_cast<std::size_t>(col_curr)]);
    const auto prev =
        csv::parse_double((*fields)[static_cast<std::size_t>(col_prev)]);
    if (!t_val || *t_val != std::floor(*t_val)) {
      warn_skip("bad step index");
      continue;
    }
    if (!curr || !std::isfinite(*curr)) {
      warn_skip("bad loss_curr");
      continue;
    }
    if (!prev || !std::isfinite(*prev)) {
      warn_skip("bad loss_prev");
      continue;
    }
    std::optional<double> sigma_row;
    if (col_sigma >= 0) {
      if (fields->size() <= static_cast<std::size_t>(col_sigma)) {
        warn_skip("missing sigma");
        continue;
      }
      sigma_row = csv::parse_double((*fields)[static_cast<std::size_t>(col_sigma)]);
      if (!sigma_row || !(*sigma_row >= 0.0) || !std::isfinite(*sigma_row)) {
        warn_skip("bad sigma");
        continue;
      }
    }
    const auto t = static_cast<std::int64_t>(*t_val);
    if (saw_row && t <= last_t) {
      throw std::invalid_argument("stream: step index must increase (line " +
                                  std::to_string(line_no) + ")");
    }
    last_t = t;
    saw_row = true;

    const LossObservation obs{*curr, *prev, 1};
    double estimate = 0.0;
    if (sigma_row) {
      // Per-row override: bypasses the schedule (and c_hat once running).
      estimate = est.phase() == Phase::burn_in ? est.update(obs, *sigma_row)
                                               : est.running_update(obs, *sigma_row);
    } else {
      estimate = est.update(obs, sched.rate_at(est.t() + 1));
    }

    std::cout << t << ',' << csv::format_double(estimate);
    if (opt.delta) {
      std::cout << ',';
      if (est.phase() == Phase::running) {
        std::cout << csv::format_double(est.fixed_time_interval(*opt.delta).half_width);
      }
    }
    std::cout << '\n';
  }
  if (!have_header && line_no > 0) {
    throw std::invalid_argument("stream: missing header row");
  }
  if (skipped > 0) {
    std::cerr << "stream: skipped " << skipped << " malformed row(s)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming estimation of an online learner's current expected loss"};
  app.require_subcommand(1);

  std::string run_config, run_output_dir;
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();
  run->add_option("--output-dir", run_output_dir,
                  "Overrides the config's output directory (and the "
                  "OEUVRE_OUTPUT_DIR environment variable)");

  std::string sweep_config, sweep_kind;
  auto* sweep = app.add_subcommand("sweep", "Hindsight baseline hyperparameter sweep");
  sweep->add_option("config", sweep_config, "Experiment config (JSON)")->required();
  sweep->add_option("estimator", sweep_kind,
                    "Baseline kind: sliding_window, ema, ffpreq, adwin")
      ->required();

  std::string cov_config;
  auto* coverage = app.add_subcommand("coverage", "Confidence-bound coverage study");
  coverage->add_option("config", cov_config, "Experiment config (JSON)")->required();

  StreamOptions sopt;
  auto* stream = app.add_subcommand(
      "stream", "Estimate from a loss CSV (t,loss_curr,loss_prev[,sigma])");
  stream->add_option("--input", sopt.input,
                     "Input CSV path (default: standard input)");
  stream->add_option("--sigma-kind", sopt.sigma_kind,
                     "Drift-rate family: inverse_t, inverse_sqrt_t, "
                     "learning_rate_proportional, constant_zero");
  stream->add_option("--eta0", sopt.eta0,
                     "Learning-rate scale for learning_rate_proportional");
  stream->add_option("--b-hat", sopt.b_hat, "Loss-scale constant");
  stream->add_option("--c-hat", sopt.c_hat, "Stability constant");
  stream->add_flag("--adaptive", sopt.adaptive,
                   "Estimate the constants from the burn-in prefix; explicit "
                   "--b-hat/--c-hat then act as priors");
  stream->add_option("--burn-in", sopt.burn_in,
                     "Burn-in length (default 30; 0 when both constants are "
                     "supplied without --adaptive)");
  stream->add_option("--delta", sopt.delta,
                     "Also print the fixed-time interval half-width at this level");
  stream->add_option("--weight-mode", sopt.weight_mode,
                     "optimal or rate_constrained");
  stream->add_option("--kappa", sopt.kappa, "rate_constrained weight scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, run_output_dir);
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_kind);
    if (coverage->parsed()) return cmd_coverage(cov_config);
    return cmd_stream(sopt);
  } catch (const std::invalid_argument& e) {
    log_error(e.what());
    return 2;
  } catch (const std::logic_error& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 3;
  }
}
