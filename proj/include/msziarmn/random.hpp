#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace msz {

/// All randomness flows through explicitly passed 64-bit Mersenne Twister streams.
using Rng = std::mt19937_64;

/// Independent stream for (seed, stream id); used per chain / replicate.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

double uniform01(Rng& rng);
double standard_normal(Rng& rng);
double gamma_draw(Rng& rng, double shape, double scale);
std::int64_t poisson_draw(Rng& rng, double mean);
std::int64_t binomial_draw(Rng& rng, std::int64_t n, double p);

/// Index drawn with probability proportional to the (non-negative) weights.
int categorical(Rng& rng, std::span<const double> weights);

/// Conditional-binomial multinomial draw; `probs` need not be normalised.
std::vector<std::int64_t> multinomial_draw(Rng& rng, std::int64_t n, std::span<const double> probs);

/// MVN(0, L L') draw from a lower Cholesky factor.
Eigen::VectorXd mvn_draw(Rng& rng, const Eigen::MatrixXd& chol_lower);

/// MVN(0, Sigma) for a symmetric positive semi-definite Sigma (eigen square root).
Eigen::VectorXd mvn_draw_psd(Rng& rng, const Eigen::MatrixXd& sigma);

/// Wishart(df, scale) by the Bartlett decomposition.
Eigen::MatrixXd wishart_draw(Rng& rng, double df, const Eigen::MatrixXd& scale);

/// Inverse-Wishart(df, scale): the inverse of Wishart(df, scale^{-1}).
Eigen::MatrixXd inverse_wishart_draw(Rng& rng, double df, const Eigen::MatrixXd& scale);

}  // namespace msz
