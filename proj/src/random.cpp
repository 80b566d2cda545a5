#include "msziarmn/random.hpp"

#include <cmath>

#include "msziarmn/errors.hpp"

namespace msz {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5a17u};
  return Rng(seq);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double gamma_draw(Rng& rng, double shape, double scale) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

std::int64_t poisson_draw(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

int categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericalError("categorical draw with zero total weight");
  double u = uniform01(rng) * total;
  int last = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last = static_cast<int>(k);
    if (u < weights[k]) return last;
    u -= weights[k];
  }
  return last;
}

std::vector<std::int64_t> multinomial_draw(Rng& rng, std::int64_t n, std::span<const double> probs) {
  std::vector<std::int64_t> out(probs.size(), 0);
  double remaining = 0.0;
  for (double p : probs) remaining += p;
  std::int64_t left = n;
  for (std::size_t k = 0; k < probs.size() && left > 0; ++k) {
    if (k + 1 == probs.size() || remaining <= probs[k]) {
      out[k] = probs[k] > 0.0 ? left : 0;
      left -= out[k];
      break;
    }
    out[k] = binomial_draw(rng, left, probs[k] / remaining);
    left -= out[k];
    remaining -= probs[k];
  }
  return out;
}

Eigen::VectorXd mvn_draw(Rng& rng, const Eigen::MatrixXd& chol_lower) {
  Eigen::VectorXd z(chol_lower.rows());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = standard_normal(rng);
  return chol_lower.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd mvn_draw_psd(Rng& rng, const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd z(sigma.rows());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = standard_normal(rng) * root(j);
  return es.eigenvectors() * z;
}

Eigen::MatrixXd wishart_draw(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index p = scale.rows();
  if (df <= static_cast<double>(p) - 1.0) throw ValidationError("Wishart degrees of freedom must exceed dimension - 1");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericalError("Wishart scale matrix is not positive definite");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(2.0 * gamma_draw(rng, 0.5 * (df - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = standard_normal(rng);
  }
  Eigen::MatrixXd LA = llt.matrixL() * A;
  return LA * LA.transpose();
}

Eigen::MatrixXd inverse_wishart_draw(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  Eigen::MatrixXd W = wishart_draw(rng, df, scale.inverse());
  Eigen::MatrixXd S = W.inverse();
  return 0.5 * (S + S.transpose());
}

}  // namespace msz
