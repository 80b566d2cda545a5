#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "msziarmn/random.hpp"

namespace msz {

/// Metropolis rule: accept when log(u) < log_ratio (so a ratio of 1 always accepts).
inline bool metropolis_accept(double log_ratio, double u) { return std::log(u) < log_ratio; }

/// Proposal scale and acceptance bookkeeping for a scalar random-walk update.
///
/// Every `interval` proposals the log scale moves by gamma * (rate - target),
/// gamma = 10 / (n + 3)^0.8 with n the number of completed adaptations.
/// The schedule is frozen at the end of burn-in.
struct ScalarAdaptation {
  double scale = 1.0;
  double target = 0.44;
  int interval = 50;
  bool frozen = false;
  int window_accepted = 0;
  int window_proposed = 0;
  int times_adapted = 0;
  long long accepted = 0;
  long long proposed = 0;

  void record(bool was_accepted);
  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
  void reset_counts() { accepted = proposed = 0; }
};

/// Proposal covariance and scale for a blocked random-walk update. The shape
/// is tracked from the chain's own history within each adaptation window.
struct BlockAdaptation {
  int dim = 0;
  double scale = 1.0;
  double target = 0.234;
  int interval = 50;
  bool frozen = false;
  Eigen::MatrixXd shape;   // proposal covariance before scaling
  Eigen::MatrixXd chol;    // lower Cholesky factor of shape
  Eigen::VectorXd window_sum;
  Eigen::MatrixXd window_outer;
  int window_accepted = 0;
  int window_proposed = 0;
  int times_adapted = 0;
  long long accepted = 0;
  long long proposed = 0;

  BlockAdaptation() = default;
  BlockAdaptation(int dim, double initial_variance, double target = 0.234, int interval = 50);

  void record(bool was_accepted, std::span<const double> state);
  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
  void reset_counts() { accepted = proposed = 0; }
};

/// One adaptive random-walk Metropolis step for a scalar. `log_target` maps a
/// value to its log posterior; `current_lp` is updated on acceptance.
template <class LogTarget>
double adaptive_rwm_update(double current, double& current_lp, LogTarget&& log_target, ScalarAdaptation& adapt,
                           Rng& rng) {
  const double proposal = current + adapt.scale * standard_normal(rng);
  const double lp = log_target(proposal);
  const bool ok = std::isfinite(lp) && metropolis_accept(lp - current_lp, uniform01(rng));
  adapt.record(ok);
  if (ok) {
    current_lp = lp;
    return proposal;
  }
  return current;
}

/// One adaptive blocked random-walk Metropolis step, updating `value` in place.
template <class LogTarget>
bool blocked_rwm_update(std::span<double> value, double& current_lp, LogTarget&& log_target, BlockAdaptation& adapt,
                        Rng& rng) {
  const int n = adapt.dim;
  double prop[16];
  double saved[16];
  Eigen::VectorXd step = mvn_draw(rng, adapt.chol) * adapt.scale;
  for (int j = 0; j < n; ++j) {
    saved[j] = value[j];
    prop[j] = value[j] + step(j);
  }
  const double lp = log_target(std::span<const double>(prop, static_cast<std::size_t>(n)));
  const bool ok = std::isfinite(lp) && metropolis_accept(lp - current_lp, uniform01(rng));
  if (ok) {
    for (int j = 0; j < n; ++j) value[j] = prop[j];
    current_lp = lp;
  } else {
    for (int j = 0; j < n; ++j) value[j] = saved[j];
  }
  adapt.record(ok, value);
  return ok;
}

}  // namespace msz
