#pragma once
// Per-step drift bounds sigma_t = c_hat * r(t) for common online learners.
//
// The rate r(t) reflects how fast the learner's updates shrink: 1/t for
// follow-the-leader style averaging, 1/sqrt(t) for regularized/mirror
// descent families, a learning-rate schedule for SGD-like rules, zero for a
// frozen model, or an arbitrary user table.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oeuvre {

enum class RateKind {
  inverse_t,
  inverse_sqrt_t,
  learning_rate_proportional,
  constant_zero,
  custom_table,
};

struct StabilitySchedule {
  RateKind kind = RateKind::inverse_sqrt_t;
  double c_hat = 1.0;
  // learning_rate_proportional: r(t) = eta0 / sqrt(t).
  double eta0 = 1.0;
  // custom_table: step function over (t, value) pairs with strictly
  // increasing t; the value of the last pair with pair.t <= t applies, the
  // first value applies before the table starts, and the final value
  // persists past its end.
  std::vector<std::pair<std::int64_t, double>> table{};

  // r(t). Throws std::invalid_argument on t < 1, c_hat < 0, eta0 < 0, or a
  // custom table that is empty, unsorted, or carries negative values.
  double rate_at(std::int64_t t) const;
  // c_hat * r(t).
  double sigma_at(std::int64_t t) const;
};

std::string to_string(RateKind kind);
RateKind rate_kind_from_string(const std::string& name);

}  // namespace oeuvre
