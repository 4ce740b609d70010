#pragma once
// Streaming estimate of an online learner's current expected loss.
//
// Each sample is scored twice, once by the current model and once by the
// previous one, and the pair feeds a one-line recursion (gamma_t in [0,1]):
//
//   L_1 = loss_1
//   L_t = loss_curr_t + (1 - gamma_t) * (L_{t-1} - loss_prev_t)
//
// A deterministic variance bound is advanced alongside, where sigma_t bounds
// the per-step loss drift (uniform stability) and b bounds the loss scale:
//
//   V_1 = b^2
//   V_t = (gamma_t * b + (1 - gamma_t) * sigma_t)^2 + (1 - gamma_t)^2 * V_{t-1}
//
// gamma_optimal() minimizes V_t at each step; the rate-constrained policy
// gamma_t = max(1/t, min(1, kappa * sigma_t)) trades variance for a decay
// guarantee. Constants (b_hat, c_hat) may be supplied or estimated from a
// burn-in prefix of the stream. Updates are O(1) time and memory.

#include <cstdint>
#include <optional>
#include <vector>

namespace oeuvre {

// Two loss evaluations on one fresh sample (or on a batch of batch_size
// samples, in which case both losses are batch means).
struct LossObservation {
  double loss_curr = 0.0;
  double loss_prev = 0.0;
  int batch_size = 1;
};

// Minimizer of variance_step over gamma. Case order breaks the sigma == b
// tie in favor of 1. Throws std::invalid_argument on var_prev < 0,
// sigma_t < 0, b <= 0, or non-finite inputs.
double gamma_optimal(double var_prev, double sigma_t, double b);

// One step of the variance recursion. Throws std::invalid_argument when
// gamma_t is outside [0,1] or the remaining arguments are invalid as above.
double variance_step(double var_prev, double gamma_t, double sigma_t, double b);

// Inflation factor 1 / (min{1, (c_hat/c)^2} * min{1, (b_hat/b)^2}) bounding
// how much a recursion run with estimated constants can undershoot one run
// with the true constants. Throws std::invalid_argument unless all inputs
// are positive and finite.
double misspecification_factor(double c_true, double c_hat,
                               double b_true, double b_hat);

enum class WeightMode { optimal, rate_constrained };

struct WeightPolicy {
  WeightMode mode = WeightMode::optimal;
  // rate_constrained only: gamma_t = max(1/t, min(1, kappa * sigma_t)).
  double kappa = 1.0;

  // t is the step index the weight applies to (>= 2 in normal operation).
  double weight(double var_prev, double sigma_t, double b, std::int64_t t) const;
};

struct EstimatorConfig {
  WeightPolicy policy{};
  // Number of leading steps used to estimate b_hat/c_hat; the estimate and
  // variance bound are re-initialized when the burn-in ends. 0 disables
  // burn-in, which requires both constants to be supplied.
  std::int64_t burn_in = 30;
  // Floor applied to the estimated b_hat^2 and c_hat^2.
  double eps_floor = 1e-8;
  // Supplied constants; estimated from the burn-in prefix when absent.
  std::optional<double> b_hat{};
  std::optional<double> c_hat{};
  // Priors used while burn-in estimates are still forming.
  double b_prior = 2.0;
  double c_prior = 1.0;
};

enum class Phase { burn_in, running };

struct EstimatorDiagnostics {
  std::int64_t resets = 0;                // running steps that used gamma == 1
  std::int64_t consecutive_resets = 0;
  std::int64_t skipped_rate_entries = 0;  // burn-in steps with rate_t == 0
  bool perpetual_reset_warning = false;   // sigma_t >= b_hat persistently
  double gamma_sum = 0.0;
  std::int64_t gamma_count = 0;
  double gamma_max = 0.0;
};

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
};

// Per-step (V_t, Gamma_t) pair, where Gamma_t is the running product of
// (1 - gamma_i); input to time_uniform_boundary().
struct StepRecord {
  double var_bound = 0.0;
  double gamma_prod = 1.0;
};

class Estimator {
 public:
  explicit Estimator(EstimatorConfig cfg);

  // One call per observation, dispatching on phase. rate_t is the stability
  // rate r(t) at the new step index; sigma_t = c_hat * r(t) with the
  // current (possibly still prior-seeded) c_hat. Returns the reported
  // estimate L_t in both phases.
  double update(const LossObservation& obs, double rate_t);

  // Running-phase step with sigma_t supplied directly (e.g. a per-record
  // override). Throws std::logic_error during burn-in.
  double running_update(const LossObservation& obs, double sigma_t);

  // Burn-in step: advances the weighted recursion with the current
  // constants, appends loss_curr and (loss_curr - loss_prev) / rate_t to
  // the constant-estimation buffers (the difference entry is skipped when
  // rate_t == 0), and refreshes b_hat/c_hat from their unbiased sample
  // variances, floored by eps_floor, once a buffer has two entries. The
  // call that reaches t == burn_in does not touch the buffers; it
  // re-initializes the estimate to loss_curr, the variance bound to
  // b_hat^2, the weight product to 1, and switches to the running phase.
  // Throws std::logic_error when already running.
  double burn_in_update(const LossObservation& obs, double rate_t);

  // Two-sided interval centered at the estimate with half-width
  // sqrt(2 * V_t * ln(2 / delta)). Throws std::invalid_argument unless
  // delta is in (0,1) and std::logic_error during burn-in.
  ConfidenceInterval fixed_time_interval(double delta) const;

  Phase phase() const { return phase_; }
  std::int64_t t() const { return t_; }
  double estimate() const { return estimate_; }
  double var_bound() const { return var_; }
  double gamma_prod() const { return gamma_prod_; }
  double b_hat() const { return b_hat_; }
  double c_hat() const { return c_hat_; }
  double last_gamma() const { return last_gamma_; }
  StepRecord step_record() const { return {var_, gamma_prod_}; }
  const EstimatorDiagnostics& diagnostics() const { return diag_; }
  const EstimatorConfig& config() const { return cfg_; }

 private:
  void finalize_burn_in(double loss_curr, int batch_size);

  EstimatorConfig cfg_;
  Phase phase_ = Phase::burn_in;
  std::int64_t t_ = 0;
  bool initialized_ = false;
  double estimate_ = 0.0;
  double var_ = 0.0;
  double gamma_prod_ = 1.0;
  double last_gamma_ = 0.0;
  double b_hat_ = 0.0;
  double c_hat_ = 0.0;
  std::vector<double> loss_buf_;
  std::vector<double> diff_buf_;
  EstimatorDiagnostics diag_;
};

// Half-widths of a crossing boundary that holds simultaneously at every
// recorded step: for history entries t = 1..T,
//   u_t = sqrt(c / (2 V_T)) * (V_T * Gamma_t / Gamma_T + V_t * Gamma_T / Gamma_t)
// with failure probability at most 2 exp(-c). Throws std::invalid_argument
// when the history is empty, c <= 0, or any recorded var_bound or
// gamma_prod is <= 0.
std::vector<double> time_uniform_boundary(const std::vector<StepRecord>& history,
                                          double crossing_c);

}  // namespace oeuvre
