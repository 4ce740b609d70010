#pragma once
// Synthetic prequential tasks. Each step draws a fresh sample, scores it
// with the model as it stood before the step (loss_prev), trains the model
// on the previous step's sample, scores the refreshed model on the same
// fresh sample (loss_curr), and reports the refreshed model's exact
// expected loss. Accessors expose enough internal state for a driver to
// replay every step from the outside.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oeuvre/estimator.hpp"
#include "oeuvre/stability.hpp"

namespace oeuvre {

using Rng = std::mt19937_64;

// Engine for replication `seed`, sub-stream `stream`; distinct inputs give
// statistically independent streams via splitmix64 mixing.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// Uniform draw from the unit sphere (a sign for dim == 1).
Eigen::VectorXd sample_unit_sphere(int dim, Rng& rng);

// Equicorrelated covariance: unit diagonal, rho off the diagonal. Requires
// dim >= 1 and rho in (-1/(dim-1), 1) so the matrix stays positive definite.
Eigen::MatrixXd equicorrelation(int dim, double rho);

// Zero-mean Gaussian draws through a cached Cholesky factor. Throws
// std::invalid_argument when cov is not square, not symmetric, or not
// positive definite.
class GaussianSampler {
 public:
  explicit GaussianSampler(Eigen::MatrixXd cov);
  Eigen::VectorXd sample(Rng& rng) const;
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

struct TaskStep {
  LossObservation obs;
  double truth = 0.0;
};

class Task {
 public:
  virtual ~Task() = default;
  virtual TaskStep step(Rng& rng) = 0;
  // Drift-rate family matching the learner's update schedule.
  virtual RateKind stability_kind() const = 0;
  virtual std::string name() const = 0;
};

// Linear regression under online gradient descent. Targets follow
// y = w*.x + noise with w* uniform on the unit sphere and x ~ N(0, cov);
// the per-sample loss is (w.x - y)^2 / dim and updates use
// w <- w - (eta0/sqrt(t)) * 2 (w.x' - y') x' / dim on the prior sample
// (x', y'). The expected loss of w is ((w-w*)' cov (w-w*) + noise^2) / dim;
// note the 1/dim scaling applies to the reported truth as well.
class LinRegTask final : public Task {
 public:
  struct Config {
    int dim = 10;
    double noise_std = 0.05;
    double rho = 0.0;  // equicorrelation of the feature covariance
    double eta0 = 0.01;
  };

  // Draws w* from init_rng; each step draws x (one sampler draw) and then
  // one standard normal for the noise.
  LinRegTask(const Config& config, Rng& init_rng);

  TaskStep step(Rng& rng) override;
  RateKind stability_kind() const override { return RateKind::inverse_sqrt_t; }
  std::string name() const override { return "linreg"; }

  double expected_loss(const Eigen::VectorXd& w) const;
  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::VectorXd& true_weights() const { return w_star_; }
  const Eigen::VectorXd& last_x() const { return last_x_; }
  double last_y() const { return last_y_; }
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  GaussianSampler sampler_;
  Eigen::VectorXd w_star_;
  Eigen::VectorXd w_;
  Eigen::VectorXd last_x_;
  double last_y_ = 0.0;
  bool has_prev_ = false;
  std::int64_t t_ = 0;
};

// Exponentially weighted forecaster over num_experts fixed loss
// distributions (Bernoulli(p_i) with p_i ~ U(0.01, 0.99), or Beta(a_i, b_i)
// with integer a_i, b_i ~ U{1..9}). Weights start uniform and follow
// p_i <- p_i exp(-eta_t * prev_loss_i) renormalized, eta_t =
// sqrt(log(num_experts) / t). The expected loss of p is mean_losses . p.
class HedgeTask final : public Task {
 public:
  enum class LossDist { bernoulli, beta };
  struct Config {
    int num_experts = 100;
    LossDist dist = LossDist::bernoulli;
  };

  HedgeTask(const Config& config, Rng& init_rng);

  TaskStep step(Rng& rng) override;
  RateKind stability_kind() const override { return RateKind::inverse_sqrt_t; }
  std::string name() const override { return "hedge"; }

  const Eigen::VectorXd& distribution() const { return p_; }
  const Eigen::VectorXd& mean_losses() const { return means_; }
  const Eigen::VectorXd& last_losses() const { return last_losses_; }
  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  Eigen::VectorXd means_;
  Eigen::VectorXd alpha_, beta_;  // beta losses only
  Eigen::VectorXd p_;
  Eigen::VectorXd last_losses_;
  Eigen::VectorXd prev_losses_;
  bool has_prev_ = false;
  std::int64_t t_ = 0;
};

// Logistic regression with Polyak-Ruppert averaging over an in-memory
// dataset whose rows are consumed in order. The averaged iterate
// w_bar_t = w_bar_{t-1} + (w_t - w_bar_{t-1}) / t is what gets scored;
// gradient steps w <- w - (eta0/sqrt(t)) (sigmoid(w.x') - y') x' use the
// raw iterate on the prior sample. The reported truth is the mean
// cross-entropy of w_bar over the full dataset.
class LogRegTask final : public Task {
 public:
  struct Config {
    double eta0 = 0.05;
  };

  // labels must be 0 or 1 and features.rows() == labels.size().
  LogRegTask(const Config& config, Eigen::MatrixXd features, Eigen::VectorXd labels);

  // Throws std::logic_error once the dataset is exhausted.
  TaskStep step(Rng& rng) override;
  RateKind stability_kind() const override { return RateKind::inverse_t; }
  std::string name() const override { return "logreg"; }

  std::int64_t remaining() const;
  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::VectorXd& averaged_weights() const { return w_bar_; }

 private:
  Config cfg_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd w_;
  Eigen::VectorXd w_bar_;
  std::int64_t next_row_ = 0;
  bool has_prev_ = false;
  std::int64_t t_ = 0;
};

// Cross-entropy of a single logit, numerically stable for large |z|.
double cross_entropy(double logit, double label);

// Frozen model emitting i.i.d. losses; loss_prev == loss_curr every step.
class StaticTask final : public Task {
 public:
  enum class Dist { uniform, bernoulli, beta };
  struct Config {
    Dist dist = Dist::uniform;
    double lo = 0.0, hi = 1.0;  // uniform
    double p = 0.5;             // bernoulli
    double a = 2.0, b = 5.0;    // beta
  };

  explicit StaticTask(const Config& config);

  TaskStep step(Rng& rng) override;
  RateKind stability_kind() const override { return RateKind::constant_zero; }
  std::string name() const override { return "static"; }
  double mean() const { return mean_; }

 private:
  Config cfg_;
  double mean_ = 0.0;
};

}  // namespace oeuvre
