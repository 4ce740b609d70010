#pragma once
// Reference estimators of the current expected loss, each fed one loss value
// per step: sliding-window mean, exponential moving average, forgetting-
// factor prequential mean, the plain running mean, and an adaptive window
// that sheds stale data when two sub-windows disagree.

#include <cstdint>
#include <deque>
#include <memory>
#include <string>

namespace oeuvre {

enum class BaselineKind { sliding_window, ema, ffpreq, adwin, prequential };

class BaselineEstimator {
 public:
  virtual ~BaselineEstimator() = default;
  // Consumes one loss and returns the refreshed estimate. Throws
  // std::invalid_argument on non-finite losses.
  virtual double update(double loss) = 0;
  virtual double estimate() const = 0;
  virtual std::string name() const = 0;
};

// Mean of the most recent `window` losses (of everything while filling).
std::unique_ptr<BaselineEstimator> make_sliding_window(std::int64_t window);
// e_1 = loss_1, e_t = (1 - lambda) e_{t-1} + lambda loss_t, lambda in (0,1].
std::unique_ptr<BaselineEstimator> make_ema(double lambda);
// S_t = loss_t + alpha S_{t-1}, N_t = 1 + alpha N_{t-1}, estimate S_t / N_t,
// alpha in [0,1).
std::unique_ptr<BaselineEstimator> make_ffpreq(double alpha);
// Running mean of all losses seen so far.
std::unique_ptr<BaselineEstimator> make_prequential();
std::unique_ptr<BaselineEstimator> make_adwin(double delta);
// Dispatch by kind; param is the window / lambda / alpha / delta and is
// ignored for prequential.
std::unique_ptr<BaselineEstimator> make_baseline(BaselineKind kind, double param);

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& name);

// Drift threshold for comparing two sub-window means: a cut fires when
// |mean0 - mean1| >= sqrt(ln(4 / delta_prime) / (2 m)) with
// m = 1 / (1/n0 + 1/n1).
double adwin_cut_threshold(double m, double delta_prime);

// Adaptive windowing over an exponential histogram: buckets hold exact
// (sum, count) pairs with counts that double per level and at most five
// buckets per level, so memory is O(log window). After each insert, every
// bucket-boundary split of the window into an older part W0 and a newer
// part W1 is tested with delta_prime = delta / window_length; when a split
// fires, W0 is dropped and the scan restarts, until no split fires. The
// estimate is the exact mean of the retained elements.
class Adwin : public BaselineEstimator {
 public:
  explicit Adwin(double delta);
  double update(double loss) override;
  double estimate() const override;
  std::string name() const override;

  std::int64_t window_length() const { return total_count_; }
  std::size_t bucket_count() const { return buckets_.size(); }

 private:
  struct Bucket {
    double sum = 0.0;
    std::int64_t count = 0;
  };

  void insert(double loss);
  void compress();
  void shed_stale();

  double delta_;
  std::deque<Bucket> buckets_;  // oldest first
  std::int64_t total_count_ = 0;
};

}  // namespace oeuvre
