// Microbenchmarks for the per-step costs: estimator updates, baseline
// updates, and synthetic task steps.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "oeuvre/baselines.hpp"
#include "oeuvre/estimator.hpp"
#include "oeuvre/tasks.hpp"

namespace {

using namespace oeuvre;

std::vector<double> uniform_losses(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = unif(rng);
  return xs;
}

EstimatorConfig running_config() {
  EstimatorConfig cfg;
  cfg.burn_in = 0;
  cfg.b_hat = 1.0;
  cfg.c_hat = 1.0;
  return cfg;
}

void BM_estimator_update(benchmark::State& state) {
  const auto xs = uniform_losses(1024, 1);
  Estimator est(running_config());
  std::size_t i = 0;
  std::int64_t t = 0;
  for (auto _ : state) {
    ++t;
    const double x = xs[i++ & 1023];
    benchmark::DoNotOptimize(
        est.update({x, x}, 1.0 / std::sqrt(static_cast<double>(t))));
  }
}
BENCHMARK(BM_estimator_update);

void BM_estimator_update_batched(benchmark::State& state) {
  const auto xs = uniform_losses(1024, 2);
  Estimator est(running_config());
  std::size_t i = 0;
  std::int64_t t = 0;
  for (auto _ : state) {
    ++t;
    const double x = xs[i++ & 1023];
    benchmark::DoNotOptimize(
        est.update({x, x, 4}, 1.0 / std::sqrt(static_cast<double>(t))));
  }
}
BENCHMARK(BM_estimator_update_batched);

void BM_estimator_adaptive_burn_in(benchmark::State& state) {
  const auto xs = uniform_losses(1024, 3);
  for (auto _ : state) {
    Estimator est{EstimatorConfig{}};  // 30-step adaptive burn-in
    for (std::int64_t t = 1; t <= 30; ++t) {
      const double x = xs[static_cast<std::size_t>(t) & 1023];
      est.update({x, x * 0.99}, 1.0 / std::sqrt(static_cast<double>(t)));
    }
    benchmark::DoNotOptimize(est.estimate());
  }
}
BENCHMARK(BM_estimator_adaptive_burn_in);

void BM_fixed_time_interval(benchmark::State& state) {
  Estimator est(running_config());
  est.update({0.5, 0.5}, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(est.fixed_time_interval(0.05));
  }
}
BENCHMARK(BM_fixed_time_interval);

void baseline_update(benchmark::State& state, BaselineKind kind, double param) {
  const auto xs = uniform_losses(1024, 4);
  const auto b = make_baseline(kind, param);
  std::size_t i = 0;
  for (auto _ : state) {
    b->update(xs[i++ & 1023]);
    benchmark::DoNotOptimize(b->estimate());
  }
}
BENCHMARK_CAPTURE(baseline_update, sliding_window_100,
                  BaselineKind::sliding_window, 100.0);
BENCHMARK_CAPTURE(baseline_update, ema_0p01, BaselineKind::ema, 0.01);
BENCHMARK_CAPTURE(baseline_update, ffpreq_0p99, BaselineKind::ffpreq, 0.99);
BENCHMARK_CAPTURE(baseline_update, prequential, BaselineKind::prequential, 0.0);
BENCHMARK_CAPTURE(baseline_update, adwin_0p01, BaselineKind::adwin, 0.01);

void BM_linreg_step(benchmark::State& state) {
  Rng init_rng = make_rng(5, 0);
  LinRegTask task({.dim = static_cast<int>(state.range(0))}, init_rng);
  Rng rng = make_rng(5, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(task.step(rng));
  }
}
BENCHMARK(BM_linreg_step)->Arg(25)->Arg(100);

void BM_hedge_step(benchmark::State& state) {
  Rng init_rng = make_rng(6, 0);
  HedgeTask task({.num_experts = static_cast<int>(state.range(0)),
                  .dist = HedgeTask::LossDist::beta},
                 init_rng);
  Rng rng = make_rng(6, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(task.step(rng));
  }
}
BENCHMARK(BM_hedge_step)->Arg(100);

void BM_static_step(benchmark::State& state) {
  StaticTask task({});
  Rng rng = make_rng(7, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(task.step(rng));
  }
}
BENCHMARK(BM_static_step);

}  // namespace

BENCHMARK_MAIN();
