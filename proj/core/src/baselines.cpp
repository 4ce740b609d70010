#include "oeuvre/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace oeuvre {
namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void validate_loss(double loss) {
  require(std::isfinite(loss), "baseline: loss must be finite");
}

std::string format_param(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", value);
  return buf;
}

// Neumaier-compensated sum; keeps long window sums exact to rounding.
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

class SlidingWindow final : public BaselineEstimator {
 public:
  explicit SlidingWindow(std::int64_t window) : window_(window) {
    require(window >= 1, "sliding_window: window must be >= 1");
  }
  double update(double loss) override {
    validate_loss(loss);
    buf_.push_back(loss);
    sum_.add(loss);
    if (buf_.size() > static_cast<std::size_t>(window_)) {
      sum_.add(-buf_.front());
      buf_.pop_front();
    }
    return estimate();
  }
  double estimate() const override {
    if (buf_.empty()) return 0.0;
    return sum_.value() / static_cast<double>(buf_.size());
  }
  std::string name() const override {
    return "sliding_window(" + std::to_string(window_) + ")";
  }

 private:
  std::int64_t window_;
  std::deque<double> buf_;
  CompensatedSum sum_;
};

class Ema final : public BaselineEstimator {
 public:
  explicit Ema(double lambda) : lambda_(lambda) {
    require(std::isfinite(lambda) && lambda > 0.0 && lambda <= 1.0,
            "ema: lambda must be in (0,1]");
  }
  double update(double loss) override {
    validate_loss(loss);
    if (!primed_) {
      primed_ = true;
      value_ = loss;
    } else {
      value_ = (1.0 - lambda_) * value_ + lambda_ * loss;
    }
    return value_;
  }
  double estimate() const override { return value_; }
  std::string name() const override { return "ema(" + format_param(lambda_) + ")"; }

 private:
  double lambda_;
  double value_ = 0.0;
  bool primed_ = false;
};

class FFPreq final : public BaselineEstimator {
 public:
  explicit FFPreq(double alpha) : alpha_(alpha) {
    require(std::isfinite(alpha) && alpha >= 0.0 && alpha < 1.0,
            "ffpreq: alpha must be in [0,1)");
  }
  double update(double loss) override {
    validate_loss(loss);
    s_ = loss + alpha_ * s_;
    n_ = 1.0 + alpha_ * n_;
    return estimate();
  }
  double estimate() const override { return n_ > 0.0 ? s_ / n_ : 0.0; }
  std::string name() const override { return "ffpreq(" + format_param(alpha_) + ")"; }

 private:
  double alpha_;
  double s_ = 0.0;
  double n_ = 0.0;
};

class Prequential final : public BaselineEstimator {
 public:
  double update(double loss) override {
    validate_loss(loss);
    sum_.add(loss);
    count_ += 1;
    return estimate();
  }
  double estimate() const override {
    return count_ > 0 ? sum_.value() / static_cast<double>(count_) : 0.0;
  }
  std::string name() const override { return "prequential"; }

 private:
  CompensatedSum sum_;
  std::int64_t count_ = 0;
};

constexpr std::size_t kMaxBucketsPerLevel = 5;

}  // namespace

double adwin_cut_threshold(double m, double delta_prime) {
  require(std::isfinite(m) && m > 0.0, "adwin: m must be > 0");
  require(std::isfinite(delta_prime) && delta_prime > 0.0 && delta_prime < 1.0,
          "adwin: delta_prime must be in (0,1)");
  return std::sqrt(std::log(4.0 / delta_prime) / (2.0 * m));
}

Adwin::Adwin(double delta) : delta_(delta) {
  require(std::isfinite(delta) && delta > 0.0 && delta < 1.0,
          "adwin: delta must be in (0,1)");
}

double Adwin::update(double loss) {
  validate_loss(loss);
  insert(loss);
  compress();
  shed_stale();
  return estimate();
}

double Adwin::estimate() const {
  if (total_count_ == 0) return 0.0;
  double sum = 0.0;
  for (const auto& b : buckets_) sum += b.sum;
  return sum / static_cast<double>(total_count_);
}

std::string Adwin::name() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", delta_);
  return std::string("adwin(") + buf + ")";
}

void Adwin::insert(double loss) {
  buckets_.push_back({loss, 1});
  total_count_ += 1;
}

void Adwin::compress() {
  // Counts double per level and run oldest-to-newest in non-increasing
  // order; when a level exceeds its bucket budget, its two oldest buckets
  // merge into the next level and the scan continues there.
  std::size_t end = buckets_.size();
  while (end > 0) {
    const std::int64_t level = buckets_[end - 1].count;
    std::size_t begin = end;
    while (begin > 0 && buckets_[begin - 1].count == level) --begin;
    if (end - begin > kMaxBucketsPerLevel) {
      buckets_[begin + 1].sum += buckets_[begin].sum;
      buckets_[begin + 1].count += buckets_[begin].count;
      buckets_.erase(buckets_.begin() + static_cast<std::ptrdiff_t>(begin));
      end = begin + 1;
    } else {
      end = begin;
    }
  }
}

void Adwin::shed_stale() {
  bool dropped = true;
  while (dropped && buckets_.size() > 1) {
    dropped = false;
    const double n = static_cast<double>(total_count_);
    const double delta_prime = delta_ / n;
    const double total = [&] {
      double s = 0.0;
      for (const auto& b : buckets_) s += b.sum;
      return s;
    }();
    double n0 = 0.0, s0 = 0.0;
    for (std::size_t i = 0; i + 1 < buckets_.size(); ++i) {
      n0 += static_cast<double>(buckets_[i].count);
      s0 += buckets_[i].sum;
      const double n1 = n - n0;
      const double m = 1.0 / (1.0 / n0 + 1.0 / n1);
      const double gap = std::abs(s0 / n0 - (total - s0) / n1);
      if (gap >= adwin_cut_threshold(m, delta_prime)) {
        // Drop the older sub-window at the firing split and rescan.
        total_count_ -= static_cast<std::int64_t>(n0);
        buckets_.erase(buckets_.begin(),
                       buckets_.begin() + static_cast<std::ptrdiff_t>(i + 1));
        dropped = true;
        break;
      }
    }
  }
}

std::unique_ptr<BaselineEstimator> make_sliding_window(std::int64_t window) {
  return std::make_unique<SlidingWindow>(window);
}
std::unique_ptr<BaselineEstimator> make_ema(double lambda) {
  return std::make_unique<Ema>(lambda);
}
std::unique_ptr<BaselineEstimator> make_ffpreq(double alpha) {
  return std::make_unique<FFPreq>(alpha);
}
std::unique_ptr<BaselineEstimator> make_prequential() {
  return std::make_unique<Prequential>();
}
std::unique_ptr<BaselineEstimator> make_adwin(double delta) {
  return std::make_unique<Adwin>(delta);
}

std::unique_ptr<BaselineEstimator> make_baseline(BaselineKind kind, double param) {
  switch (kind) {
    case BaselineKind::sliding_window: {
      const auto window = static_cast<std::int64_t>(param);
      require(static_cast<double>(window) == param,
              "baseline: sliding window size must be an integer");
      return make_sliding_window(window);
    }
    case BaselineKind::ema: return make_ema(param);
    case BaselineKind::ffpreq: return make_ffpreq(param);
    case BaselineKind::adwin: return make_adwin(param);
    case BaselineKind::prequential: return make_prequential();
  }
  throw std::invalid_argument("baseline: unknown kind");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::sliding_window: return "sliding_window";
    case BaselineKind::ema: return "ema";
    case BaselineKind::ffpreq: return "ffpreq";
    case BaselineKind::adwin: return "adwin";
    case BaselineKind::prequential: return "prequential";
  }
  throw std::invalid_argument("baseline: unknown kind");
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  if (name == "sliding_window") return BaselineKind::sliding_window;
  if (name == "ema") return BaselineKind::ema;
  if (name == "ffpreq") return BaselineKind::ffpreq;
  if (name == "adwin") return BaselineKind::adwin;
  if (name == "prequential") return BaselineKind::prequential;
  throw std::invalid_argument("baseline: unknown kind: " + name);
}

}  // namespace oeuvre
