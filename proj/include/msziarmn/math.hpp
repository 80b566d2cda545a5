#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace msz {

/// Log of zero. IEEE -inf absorbs finite addends and other -inf addends,
/// so sums of log-probabilities stay well defined as long as +inf never appears.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(logistic(x)) without overflow.
inline double log_logistic(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = kLogZero;
  for (double x : v) m = x > m ? x : m;
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace msz
