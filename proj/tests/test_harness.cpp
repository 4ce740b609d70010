#include "oeuvre/harness.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oeuvre/csv.hpp"

using namespace oeuvre;

namespace {

ExperimentConfig static_config(std::int64_t horizon) {
  ExperimentConfig cfg;
  cfg.task.kind = "static";
  cfg.task.static_dist.dist = StaticTask::Dist::uniform;
  cfg.task.static_dist.lo = 0.0;
  cfg.task.static_dist.hi = 1.0;
  cfg.horizon = horizon;
  cfg.seeds = {1, 2, 3};
  cfg.write_traces = false;
  return cfg;
}

double recompute(const std::vector<double>& errs, int which) {
  long double acc = 0.0L;
  for (double e : errs) {
    if (which == 0) acc += static_cast<long double>(e) * e;
    if (which == 1) acc += std::abs(static_cast<long double>(e));
    if (which == 2) acc += e;
  }
  return static_cast<double>(acc / static_cast<long double>(errs.size()));
}

}  // namespace

TEST_CASE("csv escaping and splitting round-trip") {
  CHECK(csv::escape_field("plain") == "plain");
  CHECK(csv::escape_field("a,b") == "\"a,b\"");
  CHECK(csv::escape_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv::escape_field("line\nbreak") == "\"line\nbreak\"");

  const std::vector<std::string> fields{"plain", "a,b", "say \"hi\"", "", "0.5"};
  std::ostringstream out;
  csv::write_row(out, fields);
  std::string line = out.str();
  REQUIRE(!line.empty());
  CHECK(line.back() == '\n');
  line.pop_back();
  const auto back = csv::split_record(line);
  REQUIRE(back.has_value());
  CHECK(*back == fields);

  CHECK(!csv::split_record("\"unterminated").has_value());
  const auto crlf = csv::split_record("a,b\r");
  REQUIRE(crlf.has_value());
  CHECK(*crlf == std::vector<std::string>{"a", "b"});
  const auto empty = csv::split_record("");
  REQUIRE(empty.has_value());
  CHECK(empty->size() == 1);
}

TEST_CASE("csv double formatting round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e300, -2.5e-17, 0.0, 12345.678,
                   6.305116760146989e-16}) {
    const auto s = csv::format_double(x);
    const auto back = csv::parse_double(s);
    REQUIRE(back.has_value());
    CHECK(*back == x);
  }
  CHECK(csv::parse_double(" 1.5 ").value() == 1.5);
  CHECK(csv::parse_double("1e-3").value() == 1e-3);
  CHECK(csv::parse_double("+2").value() == 2.0);
  CHECK(!csv::parse_double("abc").has_value());
  CHECK(!csv::parse_double("1.5x").has_value());
  CHECK(!csv::parse_double("").has_value());
}

TEST_CASE("csv numeric table reading") {
  std::istringstream in("t,loss\n\n1,0.5\n2,0.25\n");
  const auto table = csv::read_numeric_table(in);
  CHECK(table.header == std::vector<std::string>{"t", "loss"});
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[1][1] == 0.25);

  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(csv::read_numeric_table(ragged), std::runtime_error);
  std::istringstream text("a,b\n1,x\n");
  CHECK_THROWS_AS(csv::read_numeric_table(text), std::runtime_error);
  std::istringstream blank("");
  CHECK_THROWS_AS(csv::read_numeric_table(blank), std::runtime_error);
  CHECK_THROWS_AS(csv::read_numeric_table_file("/nonexistent/no.csv"),
                  std::runtime_error);
}

TEST_CASE("config parses defaults, overrides, and rejects junk") {
  const auto all_default = parse_experiment_config("{}");
  CHECK(all_default.task.kind == "linreg");
  CHECK(all_default.horizon == 10000);
  CHECK(all_default.seeds.size() == 10);
  CHECK(all_default.estimator.burn_in == 30);
  CHECK(all_default.grids.sliding_window.size() == 8);
  CHECK(all_default.grids.adwin.size() == 18);

  const auto cfg = parse_experiment_config(R"({
    "task": {"kind": "hedge", "num_experts": 16, "dist": "beta"},
    "horizon": 500,
    "num_seeds": 3, "base_seed": 7,
    "estimator": {"burn_in": 10, "weight_mode": "rate_constrained",
                  "kappa": 0.5, "b_hat": 1.5, "c_hat": 0.2},
    "baselines": [{"kind": "prequential"}, {"kind": "ema", "param": 0.1}],
    "coverage": {"replications": 200, "delta": 0.1, "checkpoints": [100, 500]}
  })");
  CHECK(cfg.task.hedge.num_experts == 16);
  CHECK(cfg.task.hedge.dist == HedgeTask::LossDist::beta);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(cfg.estimator.policy.mode == WeightMode::rate_constrained);
  CHECK(cfg.estimator.policy.kappa == 0.5);
  REQUIRE(cfg.estimator.b_hat.has_value());
  CHECK(*cfg.estimator.b_hat == 1.5);
  REQUIRE(cfg.baselines.size() == 2);
  CHECK(cfg.baselines[1].kind == BaselineKind::ema);
  CHECK(cfg.coverage.checkpoints == std::vector<std::int64_t>{100, 500});

  CHECK_THROWS_AS(parse_experiment_config("{\"horzon\": 10}"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config("not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"seeds": [1], "num_seeds": 2})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"task": {"kind": "nosuch"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"task": {"kind": "linreg", "num_experts": 5}})"),
                  std::invalid_argument);
  // Disabled burn-in needs both constants supplied up front.
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"estimator": {"burn_in": 0}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"horizon": 10, "estimator": {"burn_in": 30}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"grids": {"ema": []}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"grids": {"ema": [1.5]}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"coverage": {"delta": 1.0}})"),
                  std::invalid_argument);
}

TEST_CASE("config serialization round-trips") {
  ExperimentConfig cfg = static_config(777);
  cfg.task.static_dist.dist = StaticTask::Dist::beta;
  cfg.task.static_dist.a = 3.0;
  cfg.task.static_dist.b = 4.0;
  cfg.seeds = {5, 11};
  cfg.estimator.burn_in = 12;
  cfg.estimator.policy.mode = WeightMode::rate_constrained;
  cfg.estimator.policy.kappa = 2.0;
  cfg.estimator.c_hat = 0.25;
  cfg.baselines = {{BaselineKind::sliding_window, 50.0},
                   {BaselineKind::prequential, 0.0}};
  cfg.grids.ema = {0.2, 0.4};
  cfg.coverage.replications = 150;
  cfg.coverage.checkpoints = {100, 700};
  cfg.output_dir = "elsewhere";
  cfg.write_traces = true;

  const auto text = serialize_experiment_config(cfg);
  const auto back = parse_experiment_config(text);
  CHECK(back.task.kind == "static");
  CHECK(back.task.static_dist.dist == StaticTask::Dist::beta);
  CHECK(back.task.static_dist.a == 3.0);
  CHECK(back.horizon == 777);
  CHECK(back.seeds == cfg.seeds);
  CHECK(back.estimator.burn_in == 12);
  CHECK(back.estimator.policy.mode == WeightMode::rate_constrained);
  CHECK(back.estimator.policy.kappa == 2.0);
  CHECK(!back.estimator.b_hat.has_value());
  REQUIRE(back.estimator.c_hat.has_value());
  CHECK(*back.estimator.c_hat == 0.25);
  REQUIRE(back.baselines.size() == 2);
  CHECK(back.baselines[0].kind == BaselineKind::sliding_window);
  CHECK(back.baselines[0].param == 50.0);
  CHECK(back.grids.ema == cfg.grids.ema);
  CHECK(back.coverage.replications == 150);
  CHECK(back.coverage.checkpoints == cfg.coverage.checkpoints);
  CHECK(back.output_dir == "elsewhere");
  CHECK(back.write_traces == true);
  // Canonical form is a fixed point.
  CHECK(serialize_experiment_config(back) == text);
}

TEST_CASE("grids expose a sweep per kind except prequential") {
  const BaselineGrids grids;
  CHECK(grids.grid_for(BaselineKind::sliding_window).front() == 10.0);
  CHECK(grids.grid_for(BaselineKind::ffpreq).back() == 0.99999);
  CHECK_THROWS_AS(grids.grid_for(BaselineKind::prequential),
                  std::invalid_argument);
}

TEST_CASE("run_experiment produces scored traces with exact metric identities") {
  ExperimentConfig cfg = static_config(300);
  cfg.baselines = {{BaselineKind::prequential, 0.0}, {BaselineKind::ema, 0.1}};
  const auto result = run_experiment(cfg);

  CHECK(result.horizon == 300);
  CHECK(!result.truth_scaled_by_dim);
  CHECK(result.columns ==
        std::vector<std::string>{"t", "truth", "oeuvre", "prequential", "ema(0.1)"});
  REQUIRE(result.traces.size() == 3);
  REQUIRE(result.metrics.size() == 3);

  for (const auto& trace : result.traces) {
    REQUIRE(!trace.aborted);
    REQUIRE(trace.rows.size() == 300);
    REQUIRE(trace.metrics.size() == 3);
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
      CHECK(trace.rows[i].t == static_cast<std::int64_t>(i) + 1);
      CHECK(trace.rows[i].truth == 0.5);
      REQUIRE(trace.rows[i].baselines.size() == 2);
    }
    // Metric identities recomputed from the rows.
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> errs;
      for (const auto& row : trace.rows) {
        const double est = c == 0 ? row.oeuvre : row.baselines[c - 1];
        errs.push_back(est - row.truth);
      }
      const double mean_sq = recompute(errs, 0);
      const double mae = recompute(errs, 1);
      const double bias = recompute(errs, 2);
      CHECK(std::abs(trace.metrics[c].rmse * trace.metrics[c].rmse - mean_sq) <=
            1e-12 * std::max(1.0, mean_sq));
      CHECK(std::abs(trace.metrics[c].mae - mae) <= 1e-12);
      CHECK(std::abs(trace.metrics[c].bias - bias) <= 1e-12);
      CHECK(std::abs(trace.metrics[c].bias) <= trace.metrics[c].mae + 1e-15);
      CHECK(trace.metrics[c].mae <= trace.metrics[c].rmse + 1e-15);
    }
    CHECK(trace.b_hat > 0.0);
    CHECK(trace.final_var_bound > 0.0);
  }
  for (const auto& m : result.metrics) {
    CHECK(std::abs(m.bias_mean) <= m.mae_mean + 1e-15);
    CHECK(m.mae_mean <= m.rmse_mean + 1e-15);
    CHECK(m.rmse_std >= 0.0);
  }
}

TEST_CASE("identical config and seed reproduce byte-identical traces") {
  ExperimentConfig cfg = static_config(200);
  cfg.baselines = {{BaselineKind::sliding_window, 20.0}};
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.traces.size() == b.traces.size());
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    CHECK(trace_csv(a, a.traces[i]) == trace_csv(b, b.traces[i]));
  }
  CHECK(render_summary_json(cfg, a) == render_summary_json(cfg, b));
}

TEST_CASE("the recursive estimator column ignores the baseline roster") {
  ExperimentConfig bare = static_config(250);
  ExperimentConfig full = static_config(250);
  full.baselines = {{BaselineKind::prequential, 0.0},
                    {BaselineKind::adwin, 0.01},
                    {BaselineKind::ffpreq, 0.99}};
  const auto a = run_experiment(bare);
  const auto b = run_experiment(full);
  for (std::size_t s = 0; s < a.traces.size(); ++s) {
    REQUIRE(a.traces[s].rows.size() == b.traces[s].rows.size());
    for (std::size_t i = 0; i < a.traces[s].rows.size(); ++i) {
      CHECK(a.traces[s].rows[i].oeuvre == b.traces[s].rows[i].oeuvre);
      CHECK(a.traces[s].rows[i].truth == b.traces[s].rows[i].truth);
    }
  }
}

TEST_CASE("run_experiment persists traces and a summary") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "oeuvre_harness_persist";
  fs::remove_all(dir);

  ExperimentConfig cfg = static_config(60);
  cfg.seeds = {4};
  cfg.baselines = {{BaselineKind::prequential, 0.0}};
  cfg.output_dir = dir.string();
  cfg.write_traces = true;
  const auto result = run_experiment(cfg);

  const auto trace_path = dir / "trace_seed4.csv";
  REQUIRE(fs::exists(trace_path));
  REQUIRE(fs::exists(dir / "summary.json"));
  std::ifstream in(trace_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == trace_csv(result, result.traces[0]));
  // 1 header + horizon rows, burn-in steps included.
  std::size_t lines = 0;
  for (char ch : buf.str()) lines += ch == '\n';
  CHECK(lines == 61);
  fs::remove_all(dir);
}

TEST_CASE("linreg experiment reports dim-scaled truth and finite errors") {
  ExperimentConfig cfg;
  cfg.task.kind = "linreg";
  cfg.task.linreg.dim = 3;
  cfg.task.linreg.noise_std = 0.1;
  cfg.horizon = 150;
  cfg.seeds = {1, 2};
  cfg.write_traces = false;
  const auto result = run_experiment(cfg);
  CHECK(result.truth_scaled_by_dim);
  REQUIRE(result.metrics.size() == 1);
  CHECK(result.metrics[0].name == "oeuvre");
  CHECK(std::isfinite(result.metrics[0].rmse_mean));
  CHECK(result.metrics[0].rmse_mean > 0.0);
  for (const auto& trace : result.traces) {
    CHECK(!trace.aborted);
    CHECK(trace.c_hat > 0.0);
  }
}

TEST_CASE("sweep picks the dominant setting and breaks ties low") {
  ExperimentConfig cfg = static_config(500);

  cfg.grids.ema = {0.9, 0.05};
  const auto dominant = sweep_baseline(cfg, BaselineKind::ema);
  REQUIRE(dominant.points.size() == 2);
  CHECK(dominant.points[0].param == 0.9);
  CHECK(dominant.points[1].rmse_mean < dominant.points[0].rmse_mean);
  CHECK(dominant.best_index == 1);

  cfg.grids.ema = {0.05, 0.05};
  const auto tie = sweep_baseline(cfg, BaselineKind::ema);
  CHECK(tie.points[0].rmse_mean == tie.points[1].rmse_mean);
  CHECK(tie.best_index == 0);

  cfg.grids.ema = {0.3};
  const auto single = sweep_baseline(cfg, BaselineKind::ema);
  CHECK(single.best_index == 0);
  CHECK(single.points.at(0).param == 0.3);

  CHECK_THROWS_AS(sweep_baseline(cfg, BaselineKind::prequential),
                  std::invalid_argument);
}

TEST_CASE("coverage study reports calibrated fractions on a static stream") {
  ExperimentConfig cfg = static_config(100);
  cfg.estimator.burn_in = 20;
  cfg.coverage.replications = 100;
  cfg.coverage.delta = 0.05;
  cfg.coverage.crossing_c = 3.0;
  cfg.coverage.checkpoints = {50, 100};
  const auto result = coverage_study(cfg);

  CHECK(result.replications == 100);
  CHECK(result.first_running_t == 20);
  REQUIRE(result.checkpoints.size() == 2);
  for (const auto& cp : result.checkpoints) {
    CHECK(cp.fixed_time_coverage >= 0.0);
    CHECK(cp.fixed_time_coverage <= 1.0);
    CHECK(cp.mean_half_width > 0.0);
    // The deterministic bound is conservative by construction.
    CHECK(cp.fixed_time_coverage >= 0.9);
  }
  CHECK(result.time_uniform_coverage >= 0.8);
  CHECK(result.time_uniform_coverage <= 1.0);
  CHECK(std::abs(result.normalized_error_mean) <= 0.5);
  CHECK(result.normalized_error_std <= 1.5);

  const auto again = coverage_study(cfg);
  CHECK(render_coverage_json(cfg, again) == render_coverage_json(cfg, result));

  ExperimentConfig bad = cfg;
  bad.coverage.replications = 50;
  CHECK_THROWS_AS(coverage_study(bad), std::invalid_argument);
  bad = cfg;
  bad.coverage.checkpoints = {10};  // inside the burn-in prefix
  CHECK_THROWS_AS(coverage_study(bad), std::invalid_argument);
}

TEST_CASE("logreg experiments cap the horizon at the dataset size") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "oeuvre_harness_logreg";
  fs::create_directories(dir);
  const auto data = dir / "tiny.csv";
  {
    std::ofstream out(data);
    out << "x1,x2,y\n";
    const double rows[8][3] = {{1, 0, 1},   {0, 1, 0},  {1, 1, 1},
                               {-1, 1, 0},  {0.5, -0.5, 1}, {-1, -1, 0},
                               {0.2, 0.9, 1}, {-0.3, 0.4, 0}};
    for (const auto& r : rows) {
      out << r[0] << "," << r[1] << "," << r[2] << "\n";
    }
  }

  ExperimentConfig cfg;
  cfg.task.kind = "logreg";
  cfg.task.logreg_dataset = data.string();
  cfg.horizon = 100;
  cfg.seeds = {1};
  cfg.estimator.burn_in = 3;
  cfg.write_traces = false;
  const auto result = run_experiment(cfg);
  CHECK(result.horizon == 8);
  CHECK(result.traces[0].rows.size() == 8);

  // The default burn-in no longer fits the 8-row dataset.
  cfg.estimator.burn_in = 30;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  fs::remove_all(dir);
}
