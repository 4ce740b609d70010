#include "oeuvre/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace oeuvre {
namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double log1pexp(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t mixed =
      splitmix64(splitmix64(seed) ^ (0xD6E8FEB86659FD93ULL * (stream + 1)));
  return Rng(mixed);
}

Eigen::VectorXd sample_unit_sphere(int dim, Rng& rng) {
  require(dim >= 1, "sample_unit_sphere: dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = normal(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

Eigen::MatrixXd equicorrelation(int dim, double rho) {
  require(dim >= 1, "equicorrelation: dim must be >= 1");
  if (dim >= 2) {
    require(std::isfinite(rho) && rho < 1.0 && rho > -1.0 / (dim - 1),
            "equicorrelation: rho must be in (-1/(dim-1), 1)");
  }
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(dim, dim, rho);
  cov.diagonal().setOnes();
  return cov;
}

GaussianSampler::GaussianSampler(Eigen::MatrixXd cov) : cov_(std::move(cov)) {
  require(cov_.rows() == cov_.cols() && cov_.rows() >= 1,
          "gaussian: covariance must be square");
  const double scale = std::max(1.0, cov_.lpNorm<Eigen::Infinity>());
  require((cov_ - cov_.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12 * scale,
          "gaussian: covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  require(llt.info() == Eigen::Success,
          "gaussian: covariance must be positive definite");
  chol_ = llt.matrixL();
}

Eigen::VectorXd GaussianSampler::sample(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(cov_.rows());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = normal(rng);
  return chol_ * g;
}

LinRegTask::LinRegTask(const Config& config, Rng& init_rng)
    : cfg_(config), sampler_(equicorrelation(config.dim, config.rho)) {
  require(cfg_.dim >= 1, "linreg: dim must be >= 1");
  require(std::isfinite(cfg_.noise_std) && cfg_.noise_std >= 0.0,
          "linreg: noise_std must be >= 0");
  require(std::isfinite(cfg_.eta0) && cfg_.eta0 > 0.0, "linreg: eta0 must be > 0");
  w_star_ = sample_unit_sphere(cfg_.dim, init_rng);
  w_ = Eigen::VectorXd::Zero(cfg_.dim);
}

TaskStep LinRegTask::step(Rng& rng) {
  t_ += 1;
  const Eigen::VectorXd x = sampler_.sample(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double y = w_star_.dot(x) + cfg_.noise_std * normal(rng);

  const double resid_prev = w_.dot(x) - y;
  const double loss_prev = resid_prev * resid_prev / cfg_.dim;
  if (has_prev_) {
    const double eta = cfg_.eta0 / std::sqrt(static_cast<double>(t_));
    w_ -= eta * (2.0 / cfg_.dim) * (w_.dot(last_x_) - last_y_) * last_x_;
  }
  const double resid_curr = w_.dot(x) - y;
  const double loss_curr = resid_curr * resid_curr / cfg_.dim;

  last_x_ = x;
  last_y_ = y;
  has_prev_ = true;
  return {{loss_curr, loss_prev, 1}, expected_loss(w_)};
}

double LinRegTask::expected_loss(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd d = w - w_star_;
  return (d.dot(sampler_.cov() * d) + cfg_.noise_std * cfg_.noise_std) / cfg_.dim;
}

HedgeTask::HedgeTask(const Config& config, Rng& init_rng) : cfg_(config) {
  require(cfg_.num_experts >= 2, "hedge: num_experts must be >= 2");
  const int k = cfg_.num_experts;
  means_.resize(k);
  if (cfg_.dist == LossDist::bernoulli) {
    std::uniform_real_distribution<double> unif(0.01, 0.99);
    for (int i = 0; i < k; ++i) means_[i] = unif(init_rng);
  } else {
    alpha_.resize(k);
    beta_.resize(k);
    std::uniform_int_distribution<int> shape(1, 9);
    for (int i = 0; i < k; ++i) {
      alpha_[i] = static_cast<double>(shape(init_rng));
      beta_[i] = static_cast<double>(shape(init_rng));
      means_[i] = alpha_[i] / (alpha_[i] + beta_[i]);
    }
  }
  p_ = Eigen::VectorXd::Constant(k, 1.0 / k);
}

TaskStep HedgeTask::step(Rng& rng) {
  t_ += 1;
  const int k = cfg_.num_experts;
  Eigen::VectorXd losses(k);
  if (cfg_.dist == LossDist::bernoulli) {
    for (int i = 0; i < k; ++i) {
      losses[i] = std::bernoulli_distribution(means_[i])(rng) ? 1.0 : 0.0;
    }
  } else {
    for (int i = 0; i < k; ++i) losses[i] = sample_beta(alpha_[i], beta_[i], rng);
  }

  const double loss_prev = losses.dot(p_);
  if (has_prev_) {
    const double eta = std::sqrt(std::log(static_cast<double>(k)) /
                                 static_cast<double>(t_));
    for (int i = 0; i < k; ++i) p_[i] *= std::exp(-eta * prev_losses_[i]);
    p_ /= p_.sum();
  }
  const double loss_curr = losses.dot(p_);

  prev_losses_ = losses;
  last_losses_ = losses;
  has_prev_ = true;
  return {{loss_curr, loss_prev, 1}, means_.dot(p_)};
}

double cross_entropy(double logit, double label) {
  require(std::isfinite(logit), "cross_entropy: logit must be finite");
  require(std::isfinite(label) && label >= 0.0 && label <= 1.0,
          "cross_entropy: label must be in [0,1]");
  return log1pexp(-logit) + (1.0 - label) * logit;
}

LogRegTask::LogRegTask(const Config& config, Eigen::MatrixXd features,
                       Eigen::VectorXd labels)
    : cfg_(config), x_(std::move(features)), y_(std::move(labels)) {
  require(std::isfinite(cfg_.eta0) && cfg_.eta0 > 0.0, "logreg: eta0 must be > 0");
  require(x_.rows() == y_.size(), "logreg: feature/label row counts differ");
  require(x_.rows() >= 1, "logreg: dataset is empty");
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    require(y_[i] == 0.0 || y_[i] == 1.0, "logreg: labels must be 0 or 1");
  }
  w_ = Eigen::VectorXd::Zero(x_.cols());
  w_bar_ = Eigen::VectorXd::Zero(x_.cols());
}

std::int64_t LogRegTask::remaining() const { return x_.rows() - next_row_; }

TaskStep LogRegTask::step(Rng&) {
  if (next_row_ >= x_.rows()) {
    throw std::logic_error("logreg: dataset exhausted");
  }
  t_ += 1;
  const Eigen::VectorXd xi = x_.row(next_row_).transpose();
  const double yi = y_[next_row_];
  next_row_ += 1;

  const double loss_prev = cross_entropy(w_bar_.dot(xi), yi);
  if (has_prev_) {
    const double eta = cfg_.eta0 / std::sqrt(static_cast<double>(t_));
    const Eigen::VectorXd px = x_.row(next_row_ - 2).transpose();
    const double py = y_[next_row_ - 2];
    const double p = 1.0 / (1.0 + std::exp(-w_.dot(px)));
    w_ -= eta * (p - py) * px;
  }
  w_bar_ += (w_ - w_bar_) / static_cast<double>(t_);
  const double loss_curr = cross_entropy(w_bar_.dot(xi), yi);
  has_prev_ = true;

  const Eigen::VectorXd logits = x_ * w_bar_;
  double truth = 0.0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    truth += cross_entropy(logits[i], y_[i]);
  }
  truth /= static_cast<double>(y_.size());
  return {{loss_curr, loss_prev, 1}, truth};
}

StaticTask::StaticTask(const Config& config) : cfg_(config) {
  switch (cfg_.dist) {
    case Dist::uniform:
      require(std::isfinite(cfg_.lo) && std::isfinite(cfg_.hi) && cfg_.lo < cfg_.hi,
              "static: uniform bounds must satisfy lo < hi");
      mean_ = 0.5 * (cfg_.lo + cfg_.hi);
      break;
    case Dist::bernoulli:
      require(std::isfinite(cfg_.p) && cfg_.p >= 0.0 && cfg_.p <= 1.0,
              "static: bernoulli p must be in [0,1]");
      mean_ = cfg_.p;
      break;
    case Dist::beta:
      require(std::isfinite(cfg_.a) && std::isfinite(cfg_.b) && cfg_.a > 0.0 &&
                  cfg_.b > 0.0,
              "static: beta shapes must be > 0");
      mean_ = cfg_.a / (cfg_.a + cfg_.b);
      break;
  }
}

TaskStep StaticTask::step(Rng& rng) {
  double loss = 0.0;
  switch (cfg_.dist) {
    case Dist::uniform:
      loss = std::uniform_real_distribution<double>(cfg_.lo, cfg_.hi)(rng);
      break;
    case Dist::bernoulli:
      loss = std::bernoulli_distribution(cfg_.p)(rng) ? 1.0 : 0.0;
      break;
    case Dist::beta:
      loss = sample_beta(cfg_.a, cfg_.b, rng);
      break;
  }
  return {{loss, loss, 1}, mean_};
}

}  // namespace oeuvre
