#include "oeuvre/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oeuvre {
namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double table_rate(const std::vector<std::pair<std::int64_t, double>>& table,
                  std::int64_t t) {
  require(!table.empty(), "stability: custom table is empty");
  double prev_value = table.front().second;
  std::int64_t prev_t = table.front().first;
  require(std::isfinite(prev_value) && prev_value >= 0.0,
          "stability: table values must be >= 0");
  for (std::size_t i = 1; i < table.size(); ++i) {
    require(table[i].first > prev_t, "stability: table must be sorted by t");
    require(std::isfinite(table[i].second) && table[i].second >= 0.0,
            "stability: table values must be >= 0");
    prev_t = table[i].first;
  }
  auto it = std::upper_bound(table.begin(), table.end(), t,
                             [](std::int64_t lhs, const auto& entry) {
                               return lhs < entry.first;
                             });
  if (it == table.begin()) return table.front().second;
  return std::prev(it)->second;
}

}  // namespace

double StabilitySchedule::rate_at(std::int64_t t) const {
  require(t >= 1, "stability: t must be >= 1");
  switch (kind) {
    case RateKind::inverse_t:
      return 1.0 / static_cast<double>(t);
    case RateKind::inverse_sqrt_t:
      return 1.0 / std::sqrt(static_cast<double>(t));
    case RateKind::learning_rate_proportional:
      require(std::isfinite(eta0) && eta0 >= 0.0, "stability: eta0 must be >= 0");
      return eta0 / std::sqrt(static_cast<double>(t));
    case RateKind::constant_zero:
      return 0.0;
    case RateKind::custom_table:
      return table_rate(table, t);
  }
  throw std::invalid_argument("stability: unknown rate kind");
}

double StabilitySchedule::sigma_at(std::int64_t t) const {
  require(std::isfinite(c_hat) && c_hat >= 0.0, "stability: c_hat must be >= 0");
  return c_hat * rate_at(t);
}

std::string to_string(RateKind kind) {
  switch (kind) {
    case RateKind::inverse_t: return "inverse_t";
    case RateKind::inverse_sqrt_t: return "inverse_sqrt_t";
    case RateKind::learning_rate_proportional: return "learning_rate_proportional";
    case RateKind::constant_zero: return "constant_zero";
    case RateKind::custom_table: return "custom_table";
  }
  throw std::invalid_argument("stability: unknown rate kind");
}

RateKind rate_kind_from_string(const std::string& name) {
  if (name == "inverse_t") return RateKind::inverse_t;
  if (name == "inverse_sqrt_t") return RateKind::inverse_sqrt_t;
  if (name == "learning_rate_proportional") return RateKind::learning_rate_proportional;
  if (name == "constant_zero") return RateKind::constant_zero;
  if (name == "custom_table") return RateKind::custom_table;
  throw std::invalid_argument("stability: unknown rate kind: " + name);
}

}  // namespace oeuvre
