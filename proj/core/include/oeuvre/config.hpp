#pragma once
// Experiment configuration loaded from a JSON document. Schema (keys are
// optional unless noted; unknown keys are rejected):
//
// {
//   "task": {
//     "kind": "linreg" | "hedge" | "logreg" | "static",   // required
//     // linreg: "dim", "noise_std", "rho", "eta0"
//     // hedge:  "num_experts", "dist" ("bernoulli" | "beta")
//     // logreg: "eta0", "dataset" (CSV path; last column is the 0/1 label)
//     // static: "dist" ("uniform" | "bernoulli" | "beta"),
//     //         "lo"/"hi", "p", "a"/"b"
//   },
//   "horizon": 10000,
//   "seeds": [1, 2, 3],                  // or:
//   "num_seeds": 10, "base_seed": 1,     // expands to base..base+n-1
//   "estimator": {
//     "burn_in": 30, "eps_floor": 1e-8,
//     "weight_mode": "optimal" | "rate_constrained", "kappa": 1.0,
//     "b_hat": null, "c_hat": null,      // null/absent = adaptive
//     "b_prior": 2.0, "c_prior": 1.0
//   },
//   "baselines": [ {"kind": "sliding_window", "param": 100}, ... ],
//   "grids": { "sliding_window": [...], "ema": [...],
//              "ffpreq": [...], "adwin": [...] },
//   "coverage": { "replications": 1000, "delta": 0.05,
//                 "crossing_c": 3.0, "checkpoints": [1000] },
//   "output_dir": "out",
//   "write_traces": true
// }

#include <cstdint>
#include <string>
#include <vector>

#include "oeuvre/baselines.hpp"
#include "oeuvre/estimator.hpp"
#include "oeuvre/tasks.hpp"

namespace oeuvre {

struct TaskConfig {
  std::string kind = "linreg";
  LinRegTask::Config linreg{};
  HedgeTask::Config hedge{};
  LogRegTask::Config logreg{};
  std::string logreg_dataset{};  // CSV: feature columns then a label column
  StaticTask::Config static_dist{};
};

struct BaselineSetting {
  BaselineKind kind = BaselineKind::prequential;
  double param = 0.0;  // ignored for prequential
};

// Default hindsight-sweep grids; each is overridable per run.
struct BaselineGrids {
  std::vector<double> sliding_window{10, 50, 100, 200, 400, 600, 800, 1000};
  std::vector<double> ema{0.1, 0.05, 0.01, 0.005, 0.001};
  std::vector<double> ffpreq{0.8, 0.9, 0.95, 0.99, 0.999, 0.9999, 0.99999};
  std::vector<double> adwin{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 5e-2, 5e-3,
                            5e-4, 5e-5, 0.1,  0.2,  0.3,  0.4,  0.5,
                            0.6,  0.7,  0.8,  0.9};

  // Throws std::invalid_argument for prequential (nothing to sweep).
  const std::vector<double>& grid_for(BaselineKind kind) const;
};

struct CoverageConfig {
  std::int64_t replications = 1000;
  double delta = 0.05;
  double crossing_c = 3.0;
  std::vector<std::int64_t> checkpoints{};  // empty = {horizon}
};

struct ExperimentConfig {
  TaskConfig task{};
  std::int64_t horizon = 10000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  EstimatorConfig estimator{};
  std::vector<BaselineSetting> baselines{};
  BaselineGrids grids{};
  CoverageConfig coverage{};
  std::string output_dir = "out";
  bool write_traces = true;
};

// Parses and validates. Throws std::invalid_argument on malformed JSON,
// unknown keys, or invalid values.
ExperimentConfig parse_experiment_config(const std::string& json_text);

// File variant; throws std::runtime_error when the file cannot be read.
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical JSON rendering; parse(serialize(cfg)) reproduces cfg.
std::string serialize_experiment_config(const ExperimentConfig& cfg);

// Structural checks shared by all entry points: horizon >= burn_in + 1,
// at least one seed, non-empty grids, per-setting baseline parameters
// accepted by make_baseline, task parameters in range.
void validate(const ExperimentConfig& cfg);

}  // namespace oeuvre
