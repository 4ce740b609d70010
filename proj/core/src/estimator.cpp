#include "oeuvre/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oeuvre {
namespace {

constexpr std::int64_t kPerpetualResetThreshold = 50;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool finite(double x) { return std::isfinite(x); }

// Unbiased two-pass sample variance; 0 for fewer than two points.
double sample_variance(const std::vector<double>& xs) {
  const auto n = xs.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(n - 1);
}

void validate_observation(const LossObservation& obs) {
  require(finite(obs.loss_curr), "loss_curr must be finite");
  require(finite(obs.loss_prev), "loss_prev must be finite");
  require(obs.batch_size >= 1, "batch_size must be >= 1");
}

}  // namespace

double gamma_optimal(double var_prev, double sigma_t, double b) {
  require(finite(var_prev) && finite(sigma_t) && finite(b),
          "gamma_optimal: inputs must be finite");
  require(var_prev >= 0.0, "gamma_optimal: var_prev must be >= 0");
  require(sigma_t >= 0.0, "gamma_optimal: sigma_t must be >= 0");
  require(b > 0.0, "gamma_optimal: b must be > 0");
  if (sigma_t >= b) return 1.0;
  const double gap = b - sigma_t;
  if (var_prev <= sigma_t * gap) return 0.0;
  const double g = (var_prev - sigma_t * gap) / (var_prev + gap * gap);
  return std::clamp(g, 0.0, 1.0);
}

double variance_step(double var_prev, double gamma_t, double sigma_t, double b) {
  require(finite(var_prev) && finite(gamma_t) && finite(sigma_t) && finite(b),
          "variance_step: inputs must be finite");
  require(var_prev >= 0.0, "variance_step: var_prev must be >= 0");
  require(gamma_t >= 0.0 && gamma_t <= 1.0, "variance_step: gamma_t must be in [0,1]");
  require(sigma_t >= 0.0, "variance_step: sigma_t must be >= 0");
  require(b > 0.0, "variance_step: b must be > 0");
  const double drift = gamma_t * b + (1.0 - gamma_t) * sigma_t;
  const double keep = 1.0 - gamma_t;
  return drift * drift + keep * keep * var_prev;
}

double misspecification_factor(double c_true, double c_hat,
                               double b_true, double b_hat) {
  require(finite(c_true) && finite(c_hat) && finite(b_true) && finite(b_hat),
          "misspecification_factor: inputs must be finite");
  require(c_true > 0.0 && c_hat > 0.0 && b_true > 0.0 && b_hat > 0.0,
          "misspecification_factor: inputs must be positive");
  const double rc = std::min(1.0, (c_hat / c_true) * (c_hat / c_true));
  const double rb = std::min(1.0, (b_hat / b_true) * (b_hat / b_true));
  return 1.0 / (rc * rb);
}

double WeightPolicy::weight(double var_prev, double sigma_t, double b,
                            std::int64_t t) const {
  if (mode == WeightMode::optimal) return gamma_optimal(var_prev, sigma_t, b);
  require(kappa > 0.0 && finite(kappa), "weight: kappa must be > 0");
  require(t >= 1, "weight: t must be >= 1");
  require(finite(sigma_t) && sigma_t >= 0.0, "weight: sigma_t must be >= 0");
  return std::max(1.0 / static_cast<double>(t), std::min(1.0, kappa * sigma_t));
}

Estimator::Estimator(EstimatorConfig cfg) : cfg_(std::move(cfg)) {
  require(cfg_.burn_in >= 0, "estimator: burn_in must be >= 0");
  require(finite(cfg_.eps_floor) && cfg_.eps_floor > 0.0,
          "estimator: eps_floor must be > 0");
  require(finite(cfg_.b_prior) && cfg_.b_prior > 0.0,
          "estimator: b_prior must be > 0");
  require(finite(cfg_.c_prior) && cfg_.c_prior >= 0.0,
          "estimator: c_prior must be >= 0");
  if (cfg_.policy.mode == WeightMode::rate_constrained) {
    require(finite(cfg_.policy.kappa) && cfg_.policy.kappa > 0.0,
            "estimator: kappa must be > 0");
  }
  if (cfg_.b_hat) {
    require(finite(*cfg_.b_hat) && *cfg_.b_hat > 0.0,
            "estimator: supplied b_hat must be > 0");
  }
  if (cfg_.c_hat) {
    require(finite(*cfg_.c_hat) && *cfg_.c_hat >= 0.0,
            "estimator: supplied c_hat must be >= 0");
  }
  if (cfg_.burn_in == 0) {
    require(cfg_.b_hat.has_value() && cfg_.c_hat.has_value(),
            "estimator: burn_in = 0 requires supplied b_hat and c_hat");
    phase_ = Phase::running;
    b_hat_ = *cfg_.b_hat;
    c_hat_ = *cfg_.c_hat;
  } else {
    phase_ = Phase::burn_in;
    b_hat_ = cfg_.b_hat.value_or(cfg_.b_prior);
    c_hat_ = cfg_.c_hat.value_or(cfg_.c_prior);
  }
  var_ = b_hat_ * b_hat_;
}

double Estimator::update(const LossObservation& obs, double rate_t) {
  if (phase_ == Phase::burn_in) return burn_in_update(obs, rate_t);
  require(finite(rate_t) && rate_t >= 0.0, "update: rate_t must be >= 0");
  return running_update(obs, c_hat_ * rate_t);
}

double Estimator::burn_in_update(const LossObservation& obs, double rate_t) {
  if (phase_ != Phase::burn_in) {
    throw std::logic_error("burn_in_update: estimator is already running");
  }
  validate_observation(obs);
  require(finite(rate_t) && rate_t >= 0.0, "burn_in_update: rate_t must be >= 0");
  t_ += 1;
  if (t_ >= cfg_.burn_in) {
    finalize_burn_in(obs.loss_curr, obs.batch_size);
    return estimate_;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(obs.batch_size));
  const double b_eff = b_hat_ * scale;
  if (t_ == 1) {
    estimate_ = obs.loss_curr;
    var_ = b_eff * b_eff;
    gamma_prod_ = 1.0;
    last_gamma_ = 1.0;
  } else {
    // The recursion runs through burn-in too, driven by the prior-seeded
    // constants as they are re-estimated from the growing buffers; the
    // state is reset once the final constants are fixed at the boundary.
    const double s_eff = c_hat_ * rate_t * scale;
    const double g = cfg_.policy.weight(var_, s_eff, b_eff, t_);
    estimate_ = obs.loss_curr + (1.0 - g) * (estimate_ - obs.loss_prev);
    var_ = variance_step(var_, g, s_eff, b_eff);
    gamma_prod_ *= 1.0 - g;
    last_gamma_ = g;
  }
  // Buffer entries are rescaled to single-sample units so that estimated
  // constants stay comparable across batch sizes.
  const double unit = std::sqrt(static_cast<double>(obs.batch_size));
  loss_buf_.push_back(unit * obs.loss_curr);
  if (rate_t == 0.0) {
    diag_.skipped_rate_entries += 1;
  } else {
    diff_buf_.push_back(unit * (obs.loss_curr - obs.loss_prev) / rate_t);
  }
  // A constant refreshes once its unbiased sample variance is defined;
  // the prior holds until its buffer has two entries.
  if (!cfg_.b_hat && loss_buf_.size() >= 2) {
    b_hat_ = std::sqrt(std::max(cfg_.eps_floor, sample_variance(loss_buf_)));
  }
  if (!cfg_.c_hat && diff_buf_.size() >= 2) {
    c_hat_ = std::sqrt(std::max(cfg_.eps_floor, sample_variance(diff_buf_)));
  }
  return estimate_;
}

void Estimator::finalize_burn_in(double loss_curr, int batch_size) {
  if (!cfg_.b_hat) b_hat_ = std::sqrt(std::max(cfg_.eps_floor, sample_variance(loss_buf_)));
  if (!cfg_.c_hat) c_hat_ = std::sqrt(std::max(cfg_.eps_floor, sample_variance(diff_buf_)));
  loss_buf_.clear();
  loss_buf_.shrink_to_fit();
  diff_buf_.clear();
  diff_buf_.shrink_to_fit();
  estimate_ = loss_curr;
  var_ = b_hat_ * b_hat_ / static_cast<double>(batch_size);
  gamma_prod_ = 1.0;
  last_gamma_ = 1.0;
  initialized_ = true;
  phase_ = Phase::running;
}

double Estimator::running_update(const LossObservation& obs, double sigma_t) {
  if (phase_ != Phase::running) {
    throw std::logic_error("running_update: estimator is in burn-in");
  }
  validate_observation(obs);
  require(finite(sigma_t) && sigma_t >= 0.0, "running_update: sigma_t must be >= 0");
  const double scale = 1.0 / std::sqrt(static_cast<double>(obs.batch_size));
  const double b_eff = b_hat_ * scale;
  const double s_eff = sigma_t * scale;
  t_ += 1;
  if (!initialized_) {
    initialized_ = true;
    estimate_ = obs.loss_curr;
    var_ = b_eff * b_eff;
    gamma_prod_ = 1.0;
    last_gamma_ = 1.0;
    return estimate_;
  }
  const double g = cfg_.policy.weight(var_, s_eff, b_eff, t_);
  estimate_ = obs.loss_curr + (1.0 - g) * (estimate_ - obs.loss_prev);
  var_ = variance_step(var_, g, s_eff, b_eff);
  gamma_prod_ *= 1.0 - g;
  last_gamma_ = g;
  diag_.gamma_sum += g;
  diag_.gamma_count += 1;
  diag_.gamma_max = std::max(diag_.gamma_max, g);
  if (g >= 1.0) diag_.resets += 1;
  if (s_eff >= b_eff) {
    diag_.consecutive_resets += 1;
    if (diag_.consecutive_resets >= kPerpetualResetThreshold) {
      diag_.perpetual_reset_warning = true;
    }
  } else {
    diag_.consecutive_resets = 0;
  }
  return estimate_;
}

ConfidenceInterval Estimator::fixed_time_interval(double delta) const {
  if (phase_ != Phase::running || !initialized_) {
    throw std::logic_error("fixed_time_interval: no running-phase estimate yet");
  }
  require(finite(delta) && delta > 0.0 && delta < 1.0,
          "fixed_time_interval: delta must be in (0,1)");
  return {estimate_, std::sqrt(2.0 * var_ * std::log(2.0 / delta))};
}

std::vector<double> time_uniform_boundary(const std::vector<StepRecord>& history,
                                          double crossing_c) {
  require(!history.empty(), "time_uniform_boundary: history is empty");
  require(finite(crossing_c) && crossing_c > 0.0,
          "time_uniform_boundary: crossing_c must be > 0");
  for (const auto& rec : history) {
    require(finite(rec.var_bound) && rec.var_bound > 0.0,
            "time_uniform_boundary: var_bound entries must be > 0");
    require(finite(rec.gamma_prod) && rec.gamma_prod > 0.0,
            "time_uniform_boundary: gamma_prod entries must be > 0");
  }
  const double v_final = history.back().var_bound;
  const double g_final = history.back().gamma_prod;
  const double lead = std::sqrt(crossing_c / (2.0 * v_final));
  std::vector<double> widths;
  widths.reserve(history.size());
  for (const auto& rec : history) {
    widths.push_back(lead * (v_final * rec.gamma_prod / g_final +
                             rec.var_bound * g_final / rec.gamma_prod));
  }
  return widths;
}

}  // namespace oeuvre
