#include "oeuvre/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "oeuvre/csv.hpp"
#include "oeuvre/stability.hpp"

namespace oeuvre {
namespace {

using Json = nlohmann::ordered_json;

// Neumaier-compensated accumulator: keeps long-sum rounding error near one
// ulp so metric identities hold to 1e-12 at T = 1e4 and beyond.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Runs fn(0..n-1) across a work-stealing thread pool; slot writes must be
// disjoint. The first exception is rethrown after all threads join.
void parallel_for_index(std::int64_t n, const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::int64_t workers = std::min<std::int64_t>(n, hw);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  const auto work = [&] {
    while (true) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::vector<std::string> column_names(const std::vector<BaselineSetting>& roster) {
  std::vector<std::string> names{"t", "truth", "oeuvre"};
  for (const auto& s : roster) {
    names.push_back(make_baseline(s.kind, s.param)->name());
  }
  return names;
}

// One seeded replication: the task stream feeds the estimator the paired
// losses and every baseline the single prequential loss. A non-finite
// estimate aborts the seed (recorded, excluded from aggregation).
SeedTrace run_seed(const TaskFactory& factory, const EstimatorConfig& est_cfg,
                   const std::vector<BaselineSetting>& roster,
                   std::uint64_t seed, std::int64_t horizon, bool keep_rows) {
  SeedTrace trace;
  trace.seed = seed;

  Rng init_rng = make_rng(seed, 0);
  const auto task = factory.create(init_rng);
  Rng rng = make_rng(seed, 1);
  StabilitySchedule sched;
  sched.kind = task->stability_kind();

  Estimator est(est_cfg);
  std::vector<std::unique_ptr<BaselineEstimator>> baselines;
  baselines.reserve(roster.size());
  for (const auto& s : roster) baselines.push_back(make_baseline(s.kind, s.param));

  const std::size_t ncol = 1 + roster.size();
  std::vector<CompensatedSum> sq(ncol), ab(ncol), raw(ncol);
  if (keep_rows) trace.rows.reserve(static_cast<std::size_t>(horizon));

  for (std::int64_t t = 1; t <= horizon; ++t) {
    const TaskStep s = task->step(rng);
    TraceRow row;
    row.t = t;
    row.truth = s.truth;
    row.oeuvre = est.update(s.obs, sched.rate_at(t));
    row.baselines.reserve(roster.size());
    for (auto& b : baselines) row.baselines.push_back(b->update(s.obs.loss_curr));

    bool finite = std::isfinite(row.oeuvre);
    std::size_t bad = 0;
    for (std::size_t i = 0; finite && i < row.baselines.size(); ++i) {
      if (!std::isfinite(row.baselines[i])) {
        finite = false;
        bad = i + 1;
      }
    }
    if (!finite) {
      trace.aborted = true;
      trace.abort_reason = "non-finite estimate from " +
                           (bad == 0 ? std::string("oeuvre")
                                     : baselines[bad - 1]->name()) +
                           " at t=" + std::to_string(t);
      break;
    }

    const auto score = [&](std::size_t col, double estimate) {
      const double err = estimate - s.truth;
      sq[col].add(err * err);
      ab[col].add(std::abs(err));
      raw[col].add(err);
    };
    score(0, row.oeuvre);
    for (std::size_t i = 0; i < row.baselines.size(); ++i) {
      score(i + 1, row.baselines[i]);
    }
    if (keep_rows) trace.rows.push_back(std::move(row));
  }

  if (!trace.aborted) {
    trace.metrics.resize(ncol);
    const double n = static_cast<double>(horizon);
    for (std::size_t c = 0; c < ncol; ++c) {
      trace.metrics[c].rmse = std::sqrt(sq[c].value() / n);
      trace.metrics[c].mae = ab[c].value() / n;
      trace.metrics[c].bias = raw[c].value() / n;
    }
  }
  trace.diagnostics = est.diagnostics();
  trace.b_hat = est.b_hat();
  trace.c_hat = est.c_hat();
  trace.final_var_bound = est.var_bound();
  return trace;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  out.mean = acc.value() / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    CompensatedSum dev;
    for (double x : xs) dev.add((x - out.mean) * (x - out.mean));
    out.std = std::sqrt(dev.value() / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::vector<AggregateMetric> aggregate_metrics(
    const std::vector<std::string>& columns, const std::vector<SeedTrace>& traces) {
  const std::size_t ncol = columns.size() - 2;  // skip "t" and "truth"
  std::vector<AggregateMetric> out(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    out[c].name = columns[c + 2];
    std::vector<double> rmse, mae, bias;
    for (const auto& tr : traces) {
      if (tr.aborted) continue;
      rmse.push_back(tr.metrics[c].rmse);
      mae.push_back(tr.metrics[c].mae);
      bias.push_back(tr.metrics[c].bias);
    }
    const auto r = mean_std(rmse), m = mean_std(mae), b = mean_std(bias);
    out[c].rmse_mean = r.mean;
    out[c].rmse_std = r.std;
    out[c].mae_mean = m.mean;
    out[c].mae_std = m.std;
    out[c].bias_mean = b.mean;
    out[c].bias_std = b.std;
  }
  return out;
}

std::int64_t checked_horizon(const TaskFactory& factory, const ExperimentConfig& cfg) {
  const std::int64_t horizon = factory.max_horizon(cfg.horizon);
  if (horizon < cfg.estimator.burn_in + 1) {
    throw std::invalid_argument(
        "harness: effective horizon " + std::to_string(horizon) +
        " is shorter than burn_in + 1");
  }
  return horizon;
}

void persist_results(const ExperimentConfig& cfg, const RunResult& result) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw std::runtime_error("harness: cannot create '" + cfg.output_dir +
                             "': " + ec.message());
  }
  for (const auto& trace : result.traces) {
    const auto path =
        fs::path(cfg.output_dir) / ("trace_seed" + std::to_string(trace.seed) + ".csv");
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("harness: cannot open '" + path.string() + "'");
    }
    out << trace_csv(result, trace);
    if (!out.good()) {
      throw std::runtime_error("harness: write failed for '" + path.string() + "'");
    }
  }
  const auto path = fs::path(cfg.output_dir) / "summary.json";
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("harness: cannot open '" + path.string() + "'");
  }
  out << render_summary_json(cfg, result);
  if (!out.good()) {
    throw std::runtime_error("harness: write failed for '" + path.string() + "'");
  }
}

}  // namespace

TaskFactory::TaskFactory(const TaskConfig& cfg) : cfg_(cfg) {
  if (cfg_.kind == "logreg") {
    const auto table = csv::read_numeric_table_file(cfg_.logreg_dataset);
    if (table.header.size() < 2) {
      throw std::invalid_argument(
          "harness: logreg dataset needs >= 1 feature column plus a label");
    }
    const auto rows = static_cast<Eigen::Index>(table.rows.size());
    const auto cols = static_cast<Eigen::Index>(table.header.size()) - 1;
    features_.resize(rows, cols);
    labels_.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        features_(i, j) = table.rows[static_cast<std::size_t>(i)]
                                    [static_cast<std::size_t>(j)];
      }
      labels_[i] = table.rows[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(cols)];
    }
    // Validate labels and shape eagerly rather than at first create().
    LogRegTask probe(cfg_.logreg, features_, labels_);
    (void)probe;
  }
}

std::unique_ptr<Task> TaskFactory::create(Rng& init_rng) const {
  if (cfg_.kind == "linreg") {
    return std::make_unique<LinRegTask>(cfg_.linreg, init_rng);
  }
  if (cfg_.kind == "hedge") {
    return std::make_unique<HedgeTask>(cfg_.hedge, init_rng);
  }
  if (cfg_.kind == "logreg") {
    return std::make_unique<LogRegTask>(cfg_.logreg, features_, labels_);
  }
  if (cfg_.kind == "static") {
    return std::make_unique<StaticTask>(cfg_.static_dist);
  }
  throw std::invalid_argument("harness: unknown task kind '" + cfg_.kind + "'");
}

std::int64_t TaskFactory::max_horizon(std::int64_t requested) const {
  if (cfg_.kind == "logreg") {
    return std::min<std::int64_t>(requested, features_.rows());
  }
  return requested;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const TaskFactory factory(cfg.task);
  RunResult result;
  result.horizon = checked_horizon(factory, cfg);
  result.columns = column_names(cfg.baselines);
  result.truth_scaled_by_dim = factory.truth_scaled_by_dim();
  result.traces.resize(cfg.seeds.size());
  parallel_for_index(static_cast<std::int64_t>(cfg.seeds.size()), [&](std::int64_t i) {
    result.traces[static_cast<std::size_t>(i)] =
        run_seed(factory, cfg.estimator, cfg.baselines,
                 cfg.seeds[static_cast<std::size_t>(i)], result.horizon, true);
  });
  result.metrics = aggregate_metrics(result.columns, result.traces);
  if (cfg.write_traces) persist_results(cfg, result);
  return result;
}

SweepResult sweep_baseline(const ExperimentConfig& cfg, BaselineKind kind) {
  validate(cfg);
  const auto& grid = cfg.grids.grid_for(kind);
  const TaskFactory factory(cfg.task);
  const std::int64_t horizon = checked_horizon(factory, cfg);

  const std::int64_t nseeds = static_cast<std::int64_t>(cfg.seeds.size());
  const std::int64_t nunits = static_cast<std::int64_t>(grid.size()) * nseeds;
  std::vector<MetricTriple> unit_metrics(static_cast<std::size_t>(nunits));
  std::vector<char> unit_ok(static_cast<std::size_t>(nunits), 0);
  parallel_for_index(nunits, [&](std::int64_t u) {
    const auto g = static_cast<std::size_t>(u / nseeds);
    const auto s = static_cast<std::size_t>(u % nseeds);
    const std::vector<BaselineSetting> roster{{kind, grid[g]}};
    const auto trace =
        run_seed(factory, cfg.estimator, roster, cfg.seeds[s], horizon, false);
    if (!trace.aborted) {
      unit_metrics[static_cast<std::size_t>(u)] = trace.metrics[1];
      unit_ok[static_cast<std::size_t>(u)] = 1;
    }
  });

  SweepResult result;
  result.kind = kind;
  result.points.reserve(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> rmse, mae, bias;
    for (std::int64_t s = 0; s < nseeds; ++s) {
      const auto u = static_cast<std::size_t>(
          static_cast<std::int64_t>(g) * nseeds + s);
      if (!unit_ok[u]) continue;
      rmse.push_back(unit_metrics[u].rmse);
      mae.push_back(unit_metrics[u].mae);
      bias.push_back(unit_metrics[u].bias);
    }
    SweepPoint point;
    point.param = grid[g];
    if (rmse.empty()) {
      point.rmse_mean = std::numeric_limits<double>::infinity();
    } else {
      const auto r = mean_std(rmse);
      point.rmse_mean = r.mean;
      point.rmse_std = r.std;
      point.mae_mean = mean_std(mae).mean;
      point.bias_mean = mean_std(bias).mean;
    }
    result.points.push_back(point);
  }
  for (std::size_t g = 1; g < result.points.size(); ++g) {
    if (result.points[g].rmse_mean < result.points[result.best_index].rmse_mean) {
      result.best_index = g;
    }
  }
  return result;
}

CoverageResult coverage_study(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.coverage.replications < 100) {
    throw std::invalid_argument("coverage: replications must be >= 100");
  }
  const TaskFactory factory(cfg.task);
  const std::int64_t horizon = checked_horizon(factory, cfg);
  const std::int64_t first_running =
      cfg.estimator.burn_in == 0 ? 1 : cfg.estimator.burn_in;

  std::vector<std::int64_t> checkpoints = cfg.coverage.checkpoints;
  if (checkpoints.empty()) checkpoints.push_back(horizon);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  for (const auto cp : checkpoints) {
    if (cp < first_running || cp > horizon) {
      throw std::invalid_argument(
          "coverage: checkpoints must lie in [first running step, horizon]");
    }
  }

  const auto ncp = checkpoints.size();
  struct RepOutcome {
    std::vector<char> fixed_covered;
    std::vector<double> half_widths;
    char uniform_covered = 0;
    double normalized_error = 0.0;
  };
  const std::int64_t reps = cfg.coverage.replications;
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

  parallel_for_index(reps, [&](std::int64_t r) {
    auto& rep = outcomes[static_cast<std::size_t>(r)];
    rep.fixed_covered.assign(ncp, 0);
    rep.half_widths.assign(ncp, 0.0);

    const std::uint64_t seed = cfg.seeds.front() + static_cast<std::uint64_t>(r);
    Rng init_rng = make_rng(seed, 0);
    const auto task = factory.create(init_rng);
    Rng rng = make_rng(seed, 1);
    StabilitySchedule sched;
    sched.kind = task->stability_kind();
    Estimator est(cfg.estimator);

    std::vector<StepRecord> history;
    std::vector<double> estimates, truths;
    history.reserve(static_cast<std::size_t>(horizon - first_running + 1));

    for (std::int64_t t = 1; t <= horizon; ++t) {
      const TaskStep s = task->step(rng);
      const double e = est.update(s.obs, sched.rate_at(t));
      if (est.phase() == Phase::running) {
        history.push_back(est.step_record());
        estimates.push_back(e);
        truths.push_back(s.truth);
      }
      const auto it = std::lower_bound(checkpoints.begin(), checkpoints.end(), t);
      if (it != checkpoints.end() && *it == t) {
        const auto k = static_cast<std::size_t>(it - checkpoints.begin());
        const auto ci = est.fixed_time_interval(cfg.coverage.delta);
        rep.fixed_covered[k] = std::abs(e - s.truth) <= ci.half_width ? 1 : 0;
        rep.half_widths[k] = ci.half_width;
      }
    }

    const auto boundary = time_uniform_boundary(history, cfg.coverage.crossing_c);
    bool uniform = true;
    for (std::size_t i = 0; i < boundary.size(); ++i) {
      if (std::abs(estimates[i] - truths[i]) > boundary[i]) {
        uniform = false;
        break;
      }
    }
    rep.uniform_covered = uniform ? 1 : 0;
    rep.normalized_error = (estimates.back() - truths.back()) /
                           std::sqrt(history.back().var_bound);
  });

  CoverageResult result;
  result.replications = reps;
  result.delta = cfg.coverage.delta;
  result.crossing_c = cfg.coverage.crossing_c;
  result.first_running_t = first_running;
  result.checkpoints.resize(ncp);
  for (std::size_t k = 0; k < ncp; ++k) {
    auto& cp = result.checkpoints[k];
    cp.t = checkpoints[k];
    CompensatedSum covered, width;
    for (const auto& rep : outcomes) {
      covered.add(rep.fixed_covered[k]);
      width.add(rep.half_widths[k]);
    }
    cp.fixed_time_coverage = covered.value() / static_cast<double>(reps);
    cp.mean_half_width = width.value() / static_cast<double>(reps);
  }
  CompensatedSum uniform;
  std::vector<double> norms;
  norms.reserve(outcomes.size());
  for (const auto& rep : outcomes) {
    uniform.add(rep.uniform_covered);
    norms.push_back(rep.normalized_error);
  }
  result.time_uniform_coverage = uniform.value() / static_cast<double>(reps);
  const auto nm = mean_std(norms);
  result.normalized_error_mean = nm.mean;
  result.normalized_error_std = nm.std;
  return result;
}

std::string trace_csv(const RunResult& result, const SeedTrace& trace) {
  std::ostringstream out;
  csv::write_row(out, result.columns);
  std::vector<std::string> fields;
  for (const auto& row : trace.rows) {
    fields.clear();
    fields.push_back(std::to_string(row.t));
    fields.push_back(csv::format_double(row.truth));
    fields.push_back(csv::format_double(row.oeuvre));
    for (const double b : row.baselines) fields.push_back(csv::format_double(b));
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string render_summary_json(const ExperimentConfig& cfg, const RunResult& result) {
  Json j;
  j["task"] = cfg.task.kind;
  j["horizon"] = result.horizon;
  j["seeds"] = cfg.seeds;
  j["burn_in"] = cfg.estimator.burn_in;
  j["truth_scaled_by_dim"] = result.truth_scaled_by_dim;

  Json estimators = Json::array();
  for (const auto& m : result.metrics) {
    Json e;
    e["name"] = m.name;
    e["rmse_mean"] = m.rmse_mean;
    e["rmse_std"] = m.rmse_std;
    e["mae_mean"] = m.mae_mean;
    e["mae_std"] = m.mae_std;
    e["bias_mean"] = m.bias_mean;
    e["bias_std"] = m.bias_std;
    estimators.push_back(std::move(e));
  }
  j["estimators"] = std::move(estimators);

  Json aborted = Json::array();
  CompensatedSum b_hat, c_hat, resets, gamma_sum, var_bound;
  std::int64_t gamma_count = 0, ok = 0, warnings = 0;
  double gamma_max = 0.0;
  for (const auto& tr : result.traces) {
    if (tr.aborted) {
      Json a;
      a["seed"] = tr.seed;
      a["reason"] = tr.abort_reason;
      aborted.push_back(std::move(a));
      continue;
    }
    ++ok;
    b_hat.add(tr.b_hat);
    c_hat.add(tr.c_hat);
    resets.add(static_cast<double>(tr.diagnostics.resets));
    gamma_sum.add(tr.diagnostics.gamma_sum);
    gamma_count += tr.diagnostics.gamma_count;
    gamma_max = std::max(gamma_max, tr.diagnostics.gamma_max);
    var_bound.add(tr.final_var_bound);
    if (tr.diagnostics.perpetual_reset_warning) ++warnings;
  }
  j["aborted_seeds"] = std::move(aborted);

  Json diag;
  const double denom = ok > 0 ? static_cast<double>(ok) : 1.0;
  diag["b_hat_mean"] = b_hat.value() / denom;
  diag["c_hat_mean"] = c_hat.value() / denom;
  diag["resets_mean"] = resets.value() / denom;
  diag["gamma_mean"] =
      gamma_count > 0 ? gamma_sum.value() / static_cast<double>(gamma_count) : 0.0;
  diag["gamma_max"] = gamma_max;
  diag["final_var_bound_mean"] = var_bound.value() / denom;
  diag["perpetual_reset_warnings"] = warnings;
  j["diagnostics"] = std::move(diag);
  return j.dump(2) + "\n";
}

std::string render_sweep_json(const ExperimentConfig& cfg, const SweepResult& result) {
  Json j;
  j["task"] = cfg.task.kind;
  j["kind"] = to_string(result.kind);
  j["oracle_truth_access"] = true;
  Json points = Json::array();
  for (const auto& p : result.points) {
    Json item;
    item["param"] = p.param;
    item["rmse_mean"] = p.rmse_mean;
    item["rmse_std"] = p.rmse_std;
    item["mae_mean"] = p.mae_mean;
    item["bias_mean"] = p.bias_mean;
    points.push_back(std::move(item));
  }
  j["points"] = std::move(points);
  Json best;
  best["index"] = result.best_index;
  best["param"] = result.points[result.best_index].param;
  best["rmse_mean"] = result.points[result.best_index].rmse_mean;
  j["best"] = std::move(best);
  return j.dump(2) + "\n";
}

std::string render_coverage_json(const ExperimentConfig& cfg,
                                 const CoverageResult& result) {
  Json j;
  j["task"] = cfg.task.kind;
  j["replications"] = result.replications;
  j["delta"] = result.delta;
  j["crossing_c"] = result.crossing_c;
  j["first_running_t"] = result.first_running_t;
  Json checkpoints = Json::array();
  for (const auto& cp : result.checkpoints) {
    Json item;
    item["t"] = cp.t;
    item["fixed_time_coverage"] = cp.fixed_time_coverage;
    item["mean_half_width"] = cp.mean_half_width;
    checkpoints.push_back(std::move(item));
  }
  j["checkpoints"] = std::move(checkpoints);
  j["time_uniform_coverage"] = result.time_uniform_coverage;
  j["normalized_error_mean"] = result.normalized_error_mean;
  j["normalized_error_std"] = result.normalized_error_std;
  return j.dump(2) + "\n";
}

}  // namespace oeuvre
