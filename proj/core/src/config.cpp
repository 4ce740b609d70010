#include "oeuvre/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace oeuvre {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const Json& obj, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      fail(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

WeightMode weight_mode_from_string(const std::string& name) {
  if (name == "optimal") return WeightMode::optimal;
  if (name == "rate_constrained") return WeightMode::rate_constrained;
  fail("unknown weight_mode '" + name + "'");
}

std::string to_string(WeightMode mode) {
  return mode == WeightMode::optimal ? "optimal" : "rate_constrained";
}

TaskConfig parse_task(const Json& j) {
  if (!j.is_object()) fail("'task' must be an object");
  TaskConfig task;
  task.kind = j.at("kind").get<std::string>();
  if (task.kind == "linreg") {
    check_keys(j, {"kind", "dim", "noise_std", "rho", "eta0"}, "task");
    auto& c = task.linreg;
    if (j.contains("dim")) c.dim = j.at("dim").get<int>();
    if (j.contains("noise_std")) c.noise_std = j.at("noise_std").get<double>();
    if (j.contains("rho")) c.rho = j.at("rho").get<double>();
    if (j.contains("eta0")) c.eta0 = j.at("eta0").get<double>();
  } else if (task.kind == "hedge") {
    check_keys(j, {"kind", "num_experts", "dist"}, "task");
    auto& c = task.hedge;
    if (j.contains("num_experts")) c.num_experts = j.at("num_experts").get<int>();
    if (j.contains("dist")) {
      const auto dist = j.at("dist").get<std::string>();
      if (dist == "bernoulli") {
        c.dist = HedgeTask::LossDist::bernoulli;
      } else if (dist == "beta") {
        c.dist = HedgeTask::LossDist::beta;
      } else {
        fail("unknown hedge dist '" + dist + "'");
      }
    }
  } else if (task.kind == "logreg") {
    check_keys(j, {"kind", "eta0", "dataset"}, "task");
    if (j.contains("eta0")) task.logreg.eta0 = j.at("eta0").get<double>();
    task.logreg_dataset = j.at("dataset").get<std::string>();
  } else if (task.kind == "static") {
    check_keys(j, {"kind", "dist", "lo", "hi", "p", "a", "b"}, "task");
    auto& c = task.static_dist;
    const auto dist = j.value("dist", std::string("uniform"));
    if (dist == "uniform") {
      c.dist = StaticTask::Dist::uniform;
    } else if (dist == "bernoulli") {
      c.dist = StaticTask::Dist::bernoulli;
    } else if (dist == "beta") {
      c.dist = StaticTask::Dist::beta;
    } else {
      fail("unknown static dist '" + dist + "'");
    }
    if (j.contains("lo")) c.lo = j.at("lo").get<double>();
    if (j.contains("hi")) c.hi = j.at("hi").get<double>();
    if (j.contains("p")) c.p = j.at("p").get<double>();
    if (j.contains("a")) c.a = j.at("a").get<double>();
    if (j.contains("b")) c.b = j.at("b").get<double>();
  } else {
    fail("unknown task kind '" + task.kind + "'");
  }
  return task;
}

Json render_task(const TaskConfig& task) {
  Json j;
  j["kind"] = task.kind;
  if (task.kind == "linreg") {
    j["dim"] = task.linreg.dim;
    j["noise_std"] = task.linreg.noise_std;
    j["rho"] = task.linreg.rho;
    j["eta0"] = task.linreg.eta0;
  } else if (task.kind == "hedge") {
    j["num_experts"] = task.hedge.num_experts;
    j["dist"] =
        task.hedge.dist == HedgeTask::LossDist::bernoulli ? "bernoulli" : "beta";
  } else if (task.kind == "logreg") {
    j["eta0"] = task.logreg.eta0;
    j["dataset"] = task.logreg_dataset;
  } else {
    switch (task.static_dist.dist) {
      case StaticTask::Dist::uniform:
        j["dist"] = "uniform";
        j["lo"] = task.static_dist.lo;
        j["hi"] = task.static_dist.hi;
        break;
      case StaticTask::Dist::bernoulli:
        j["dist"] = "bernoulli";
        j["p"] = task.static_dist.p;
        break;
      case StaticTask::Dist::beta:
        j["dist"] = "beta";
        j["a"] = task.static_dist.a;
        j["b"] = task.static_dist.b;
        break;
    }
  }
  return j;
}

EstimatorConfig parse_estimator(const Json& j) {
  EstimatorConfig cfg;
  check_keys(j,
             {"burn_in", "eps_floor", "weight_mode", "kappa", "b_hat", "c_hat",
              "b_prior", "c_prior"},
             "estimator");
  if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<std::int64_t>();
  if (j.contains("eps_floor")) cfg.eps_floor = j.at("eps_floor").get<double>();
  if (j.contains("weight_mode")) {
    cfg.policy.mode = weight_mode_from_string(j.at("weight_mode").get<std::string>());
  }
  if (j.contains("kappa")) cfg.policy.kappa = j.at("kappa").get<double>();
  if (j.contains("b_hat") && !j.at("b_hat").is_null()) {
    cfg.b_hat = j.at("b_hat").get<double>();
  }
  if (j.contains("c_hat") && !j.at("c_hat").is_null()) {
    cfg.c_hat = j.at("c_hat").get<double>();
  }
  if (j.contains("b_prior")) cfg.b_prior = j.at("b_prior").get<double>();
  if (j.contains("c_prior")) cfg.c_prior = j.at("c_prior").get<double>();
  return cfg;
}

std::vector<BaselineSetting> parse_baselines(const Json& j) {
  if (!j.is_array()) fail("'baselines' must be an array");
  std::vector<BaselineSetting> out;
  for (const auto& item : j) {
    check_keys(item, {"kind", "param"}, "baselines[]");
    BaselineSetting s;
    s.kind = baseline_kind_from_string(item.at("kind").get<std::string>());
    if (item.contains("param")) s.param = item.at("param").get<double>();
    out.push_back(s);
  }
  return out;
}

BaselineGrids parse_grids(const Json& j) {
  BaselineGrids grids;
  check_keys(j, {"sliding_window", "ema", "ffpreq", "adwin"}, "grids");
  const auto read = [&](const char* key, std::vector<double>& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::vector<double>>();
  };
  read("sliding_window", grids.sliding_window);
  read("ema", grids.ema);
  read("ffpreq", grids.ffpreq);
  read("adwin", grids.adwin);
  return grids;
}

CoverageConfig parse_coverage(const Json& j) {
  CoverageConfig cov;
  check_keys(j, {"replications", "delta", "crossing_c", "checkpoints"},
             "coverage");
  if (j.contains("replications")) {
    cov.replications = j.at("replications").get<std::int64_t>();
  }
  if (j.contains("delta")) cov.delta = j.at("delta").get<double>();
  if (j.contains("crossing_c")) cov.crossing_c = j.at("crossing_c").get<double>();
  if (j.contains("checkpoints")) {
    cov.checkpoints = j.at("checkpoints").get<std::vector<std::int64_t>>();
  }
  return cov;
}

}  // namespace

const std::vector<double>& BaselineGrids::grid_for(BaselineKind kind) const {
  switch (kind) {
    case BaselineKind::sliding_window:
      return sliding_window;
    case BaselineKind::ema:
      return ema;
    case BaselineKind::ffpreq:
      return ffpreq;
    case BaselineKind::adwin:
      return adwin;
    case BaselineKind::prequential:
      break;
  }
  throw std::invalid_argument("config: prequential has no sweep grid");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");

  ExperimentConfig cfg;
  try {
    check_keys(j,
               {"task", "horizon", "seeds", "num_seeds", "base_seed",
                "estimator", "baselines", "grids", "coverage", "output_dir",
                "write_traces"},
               "top level");
    if (j.contains("task")) cfg.task = parse_task(j.at("task"));
    if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<std::int64_t>();
    if (j.contains("seeds")) {
      if (j.contains("num_seeds") || j.contains("base_seed")) {
        fail("'seeds' conflicts with 'num_seeds'/'base_seed'");
      }
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else if (j.contains("num_seeds") || j.contains("base_seed")) {
      const auto n = j.value("num_seeds", std::int64_t{10});
      const auto base = j.value("base_seed", std::uint64_t{1});
      if (n < 1) fail("'num_seeds' must be >= 1");
      cfg.seeds.clear();
      for (std::int64_t i = 0; i < n; ++i) {
        cfg.seeds.push_back(base + static_cast<std::uint64_t>(i));
      }
    }
    if (j.contains("estimator")) cfg.estimator = parse_estimator(j.at("estimator"));
    if (j.contains("baselines")) cfg.baselines = parse_baselines(j.at("baselines"));
    if (j.contains("grids")) cfg.grids = parse_grids(j.at("grids"));
    if (j.contains("coverage")) cfg.coverage = parse_coverage(j.at("coverage"));
    if (j.contains("output_dir")) {
      cfg.output_dir = j.at("output_dir").get<std::string>();
    }
    if (j.contains("write_traces")) {
      cfg.write_traces = j.at("write_traces").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("bad value: ") + e.what());
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  Json j;
  j["task"] = render_task(cfg.task);
  j["horizon"] = cfg.horizon;
  j["seeds"] = cfg.seeds;
  Json est;
  est["burn_in"] = cfg.estimator.burn_in;
  est["eps_floor"] = cfg.estimator.eps_floor;
  est["weight_mode"] = to_string(cfg.estimator.policy.mode);
  est["kappa"] = cfg.estimator.policy.kappa;
  est["b_hat"] = cfg.estimator.b_hat ? Json(*cfg.estimator.b_hat) : Json(nullptr);
  est["c_hat"] = cfg.estimator.c_hat ? Json(*cfg.estimator.c_hat) : Json(nullptr);
  est["b_prior"] = cfg.estimator.b_prior;
  est["c_prior"] = cfg.estimator.c_prior;
  j["estimator"] = std::move(est);
  Json baselines = Json::array();
  for (const auto& s : cfg.baselines) {
    Json item;
    item["kind"] = to_string(s.kind);
    item["param"] = s.param;
    baselines.push_back(std::move(item));
  }
  j["baselines"] = std::move(baselines);
  Json grids;
  grids["sliding_window"] = cfg.grids.sliding_window;
  grids["ema"] = cfg.grids.ema;
  grids["ffpreq"] = cfg.grids.ffpreq;
  grids["adwin"] = cfg.grids.adwin;
  j["grids"] = std::move(grids);
  Json cov;
  cov["replications"] = cfg.coverage.replications;
  cov["delta"] = cfg.coverage.delta;
  cov["crossing_c"] = cfg.coverage.crossing_c;
  cov["checkpoints"] = cfg.coverage.checkpoints;
  j["coverage"] = std::move(cov);
  j["output_dir"] = cfg.output_dir;
  j["write_traces"] = cfg.write_traces;
  return j.dump(2) + "\n";
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.horizon < 1) fail("horizon must be >= 1");
  if (cfg.estimator.burn_in < 0) fail("burn_in must be >= 0");
  if (cfg.horizon < cfg.estimator.burn_in + 1) {
    fail("horizon must be >= burn_in + 1");
  }
  if (cfg.seeds.empty()) fail("at least one seed is required");
  if (!(cfg.estimator.eps_floor > 0.0)) fail("eps_floor must be > 0");
  if (!(cfg.estimator.policy.kappa > 0.0)) fail("kappa must be > 0");
  if (!(cfg.estimator.b_prior > 0.0)) fail("b_prior must be > 0");
  if (!(cfg.estimator.c_prior > 0.0)) fail("c_prior must be > 0");
  if (cfg.estimator.b_hat && !(*cfg.estimator.b_hat > 0.0)) {
    fail("b_hat must be > 0 when supplied");
  }
  if (cfg.estimator.c_hat && !(*cfg.estimator.c_hat >= 0.0)) {
    fail("c_hat must be >= 0 when supplied");
  }
  if (cfg.estimator.burn_in == 0 &&
      !(cfg.estimator.b_hat && cfg.estimator.c_hat)) {
    fail("burn_in 0 requires both b_hat and c_hat");
  }

  const auto& task = cfg.task;
  if (task.kind == "linreg") {
    const auto& c = task.linreg;
    if (c.dim < 1) fail("linreg dim must be >= 1");
    if (!(c.noise_std >= 0.0)) fail("linreg noise_std must be >= 0");
    if (!(c.eta0 > 0.0)) fail("linreg eta0 must be > 0");
    if (c.dim >= 2 && !(c.rho < 1.0 && c.rho > -1.0 / (c.dim - 1))) {
      fail("linreg rho out of the positive-definite range");
    }
  } else if (task.kind == "hedge") {
    if (task.hedge.num_experts < 2) fail("hedge num_experts must be >= 2");
  } else if (task.kind == "logreg") {
    if (!(task.logreg.eta0 > 0.0)) fail("logreg eta0 must be > 0");
    if (task.logreg_dataset.empty()) fail("logreg requires a dataset path");
  } else if (task.kind == "static") {
    try {
      StaticTask probe(task.static_dist);
      (void)probe;
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  } else {
    fail("unknown task kind '" + task.kind + "'");
  }

  for (const auto& s : cfg.baselines) {
    try {
      make_baseline(s.kind, s.param);
    } catch (const std::invalid_argument& e) {
      fail(std::string("baseline ") + to_string(s.kind) + ": " + e.what());
    }
  }
  const auto check_grid = [&](BaselineKind kind, const std::vector<double>& grid) {
    if (grid.empty()) fail(std::string("grid for ") + to_string(kind) + " is empty");
    for (double v : grid) {
      try {
        make_baseline(kind, v);
      } catch (const std::invalid_argument& e) {
        fail(std::string("grid for ") + to_string(kind) + ": " + e.what());
      }
    }
  };
  check_grid(BaselineKind::sliding_window, cfg.grids.sliding_window);
  check_grid(BaselineKind::ema, cfg.grids.ema);
  check_grid(BaselineKind::ffpreq, cfg.grids.ffpreq);
  check_grid(BaselineKind::adwin, cfg.grids.adwin);

  if (cfg.coverage.replications < 1) fail("coverage replications must be >= 1");
  if (!(cfg.coverage.delta > 0.0 && cfg.coverage.delta < 1.0)) {
    fail("coverage delta must be in (0,1)");
  }
  if (!(cfg.coverage.crossing_c > 0.0)) fail("coverage crossing_c must be > 0");
  for (const auto cp : cfg.coverage.checkpoints) {
    if (cp < 1 || cp > cfg.horizon) {
      fail("coverage checkpoints must lie in [1, horizon]");
    }
  }
  if (cfg.output_dir.empty()) fail("output_dir must not be empty");
}

}  // namespace oeuvre
