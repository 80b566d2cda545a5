#include "msziarmn/mcmc.hpp"

#include "msziarmn/errors.hpp"

namespace msz {

namespace {
double adapt_gain(int times_adapted) { return 1.0 / std::pow(static_cast<double>(times_adapted) + 3.0, 0.8); }
}  // namespace

void ScalarAdaptation::record(bool was_accepted) {
  ++proposed;
  accepted += was_accepted;
  if (frozen) return;
  ++window_proposed;
  window_accepted += was_accepted;
  if (window_proposed < interval) return;
  const double rate = static_cast<double>(window_accepted) / window_proposed;
  scale *= std::exp(10.0 * adapt_gain(times_adapted) * (rate - target));
  ++times_adapted;
  window_accepted = window_proposed = 0;
}

BlockAdaptation::BlockAdaptation(int d, double initial_variance, double tgt, int iv)
    : dim(d),
      scale(2.38 / std::sqrt(static_cast<double>(d))),
      target(tgt),
      interval(iv),
      shape(Eigen::MatrixXd::Identity(d, d) * initial_variance),
      chol(Eigen::MatrixXd::Identity(d, d) * std::sqrt(initial_variance)),
      window_sum(Eigen::VectorXd::Zero(d)),
      window_outer(Eigen::MatrixXd::Zero(d, d)) {
  if (d < 1 || d > 16) throw ValidationError("blocked updates support 1..16 dimensions");
}

void BlockAdaptation::record(bool was_accepted, std::span<const double> state) {
  ++proposed;
  accepted += was_accepted;
  if (frozen) return;
  ++window_proposed;
  window_accepted += was_accepted;
  Eigen::Map<const Eigen::VectorXd> x(state.data(), dim);
  window_sum += x;
  window_outer.noalias() += x * x.transpose();
  if (window_proposed < interval) return;

  const double n = window_proposed;
  const double rate = window_accepted / n;
  const double g = adapt_gain(times_adapted);
  scale *= std::exp(10.0 * g * (rate - target));
  Eigen::VectorXd mean = window_sum / n;
  Eigen::MatrixXd emp = (window_outer - n * mean * mean.transpose()) / (n - 1.0);
  // Only fold in the empirical shape once the chain has actually moved.
  if (window_accepted > 0) {
    Eigen::MatrixXd candidate = shape + g * (emp - shape);
    candidate = 0.5 * (candidate + candidate.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(candidate);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-12) {
      shape = candidate;
      chol = llt.matrixL();
    }
  }
  ++times_adapted;
  window_accepted = window_proposed = 0;
  window_sum.setZero();
  window_outer.setZero();
}

}  // namespace msz
