#pragma once
// Experiment driver: streams a task through the recursive estimator and a
// roster of baselines, scores every estimate against exact ground truth,
// sweeps baseline hyperparameters in hindsight, and measures confidence-
// bound coverage. Seeds (and sweep grid points) run in parallel and are
// merged in seed order, so parallel and serial runs produce identical
// output; with a fixed config and seed, trace files are byte-identical.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oeuvre/config.hpp"

namespace oeuvre {

// Builds per-seed task instances; for logreg the dataset (CSV whose last
// column is the 0/1 label) is loaded once at construction.
class TaskFactory {
 public:
  // Throws std::runtime_error when the logreg dataset cannot be read and
  // std::invalid_argument when task parameters are rejected.
  explicit TaskFactory(const TaskConfig& cfg);

  std::unique_ptr<Task> create(Rng& init_rng) const;
  // logreg runs are capped by the dataset size; other tasks are unbounded.
  std::int64_t max_horizon(std::int64_t requested) const;
  bool truth_scaled_by_dim() const { return cfg_.kind == "linreg"; }
  const TaskConfig& config() const { return cfg_; }

 private:
  TaskConfig cfg_;
  Eigen::MatrixXd features_;  // logreg only
  Eigen::VectorXd labels_;
};

struct TraceRow {
  std::int64_t t = 0;
  double truth = 0.0;
  double oeuvre = 0.0;
  std::vector<double> baselines;  // parallel to the baseline roster
};

// Time-averaged error metrics over every step of a seed, burn-in included:
// rmse = sqrt(mean(err^2)), mae = mean(|err|), bias = mean(err) with
// err_t = estimate_t - truth_t. |bias| <= mae <= rmse always holds;
// rmse >= mae >= |bias| in that order is not asserted elsewhere because
// only rmse >= |bias| is distribution-free.
struct MetricTriple {
  double rmse = 0.0;
  double mae = 0.0;
  double bias = 0.0;
};

struct SeedTrace {
  std::uint64_t seed = 0;
  bool aborted = false;  // a non-finite estimate appeared; metrics excluded
  std::string abort_reason;
  std::vector<TraceRow> rows;         // retained by run_experiment
  std::vector<MetricTriple> metrics;  // one per column: oeuvre first
  EstimatorDiagnostics diagnostics{};
  double b_hat = 0.0;
  double c_hat = 0.0;
  double final_var_bound = 0.0;
};

struct AggregateMetric {
  std::string name;  // "oeuvre" or a baseline name such as "ema(0.05)"
  double rmse_mean = 0.0, rmse_std = 0.0;
  double mae_mean = 0.0, mae_std = 0.0;
  double bias_mean = 0.0, bias_std = 0.0;
};

struct RunResult {
  std::vector<std::string> columns;      // "t", "truth", "oeuvre", baselines
  std::vector<SeedTrace> traces;         // seed order
  std::vector<AggregateMetric> metrics;  // oeuvre first, then the roster
  std::int64_t horizon = 0;              // effective (dataset-capped) horizon
  bool truth_scaled_by_dim = false;      // linreg truth is loss / dim
};

// Runs every seed, aggregates mean and sample standard deviation of the
// per-seed metrics (aborted seeds excluded), and when cfg.write_traces
// persists one CSV per seed plus summary.json under cfg.output_dir.
// Throws std::invalid_argument on a bad config, std::runtime_error on I/O.
RunResult run_experiment(const ExperimentConfig& cfg);

struct SweepPoint {
  double param = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double mae_mean = 0.0;
  double bias_mean = 0.0;
};

struct SweepResult {
  BaselineKind kind{};
  std::vector<SweepPoint> points;  // grid order
  std::size_t best_index = 0;      // argmin rmse_mean; ties keep the
                                   // earliest grid entry
};

// Hindsight sweep over cfg.grids.grid_for(kind): every grid value runs all
// seeds; selection minimizes mean RMSE against oracle ground truth (an
// advantage unavailable without the truth column).
SweepResult sweep_baseline(const ExperimentConfig& cfg, BaselineKind kind);

struct CoverageCheckpoint {
  std::int64_t t = 0;
  double fixed_time_coverage = 0.0;  // fraction of reps covering the truth
  double mean_half_width = 0.0;
};

struct CoverageResult {
  std::int64_t replications = 0;
  double delta = 0.0;
  double crossing_c = 0.0;
  std::int64_t first_running_t = 0;  // burn_in, or 1 when burn_in == 0
  std::vector<CoverageCheckpoint> checkpoints;
  // Fraction of reps whose truth stayed inside the crossing boundary at
  // every step from first_running_t through the horizon.
  double time_uniform_coverage = 0.0;
  // Moments of (estimate_T - truth_T) / sqrt(V_T) across reps; the
  // deterministic bound keeps the standard deviation at or below ~1.
  double normalized_error_mean = 0.0;
  double normalized_error_std = 0.0;
};

// Monte Carlo coverage of the fixed-time intervals (at
// cfg.coverage.checkpoints, default {horizon}) and of the time-uniform
// boundary at crossing_c. Replication r uses seed cfg.seeds.front() + r.
// Requires cfg.coverage.replications >= 100 and checkpoints past burn-in.
CoverageResult coverage_study(const ExperimentConfig& cfg);

// Deterministic renderings (stable key order, no timestamps).
std::string render_summary_json(const ExperimentConfig& cfg, const RunResult& result);
std::string render_sweep_json(const ExperimentConfig& cfg, const SweepResult& result);
std::string render_coverage_json(const ExperimentConfig& cfg,
                                 const CoverageResult& result);
std::string trace_csv(const RunResult& result, const SeedTrace& trace);

}  // namespace oeuvre
