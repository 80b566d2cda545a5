#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msziarmn/model.hpp"
#include "msziarmn/random.hpp"
#include "msziarmn/sampler.hpp"

namespace msz {

/// Widely applicable information criterion with the latent states
/// marginalised: per-cell marginal likelihoods p(y_it | y_{1:t-1}, v) over
/// the retained draws, cells t >= 2.
struct WaicReport {
  int N = 0, T = 0;
  std::size_t draws = 0;
  double lpdd = 0.0;
  double pwaic = 0.0;
  double waic = 0.0;
  std::vector<double> cell_lpd;    // [i * T + t], 0 at t = 0
  std::vector<double> cell_pwaic;  // [i * T + t]
};

/// From a draws x (N*T) matrix of per-cell log-likelihoods (row-major).
WaicReport waic_from_logliks(const std::vector<double>& logliks, std::size_t draws, int N, int T);
/// From the per-cell terms stored during sampling.
WaicReport waic(const PosteriorDraws& draws);
/// Recomputes the per-cell terms with the forward filter for every retained
/// draw (requires stored phi).
WaicReport waic(const PosteriorDraws& draws, const Model& model);
/// Forward-filter per-cell log-likelihoods of every retained draw, draw-major.
std::vector<double> recompute_cell_logliks(const PosteriorDraws& draws, const Model& model);

/// Posterior-predictive replicate counts y'_it (length K) for every retained
/// draw: a fresh phi' ~ MVN(0, Sigma), the drawn state and the observed total.
std::vector<std::vector<std::int64_t>> fitted_values(const PosteriorDraws& draws, const Model& model, int i, int t,
                                                     Rng& rng);

/// Monte Carlo P(S_kit = 1 | y) for non-baseline disease d.
double presence_probability(const PosteriorDraws& draws, int d, int i, int t);

struct Summary {
  double mean = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
};

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);
/// Mean with the equal-tailed 95% interval; throws ValidationError on empty input.
Summary summarize_values(const std::vector<double>& values);

enum class Transform { Identity, Exp, Logistic };

struct SummaryRow {
  std::string name;
  std::string transform;
  Summary summary;
};

/// Posterior summary of every stored parameter; `transforms` maps a
/// parameter-name prefix (e.g. "alpha[") to a transform applied per draw.
std::vector<SummaryRow> summarize(const PosteriorDraws& draws, const std::map<std::string, Transform>& transforms = {});

/// Presence-weighted average relative favourability of disease d in area i:
/// sum_t lambda_kit S_kit / sum_t S_kit per draw (requires stored phi).
/// Draws with no presence are excluded and counted.
struct LambdaBar {
  Summary summary;
  std::size_t used = 0;
  std::size_t excluded = 0;
};
LambdaBar lambda_bar(const PosteriorDraws& draws, const Model& model, int d, int i);

/// lambda = exp(alpha_0k + g * alpha_c) over a covariate grid (given in the
/// covariate's original units when a standardisation record exists), with
/// the values of g where the posterior mean crosses `threshold`.
struct ResponseCurve {
  std::string disease, covariate;
  std::vector<double> grid;
  std::vector<Summary> lambda;
  std::vector<double> crossings;
};
ResponseCurve response_curve(const PosteriorDraws& draws, const Model& model, int d, int slot,
                             const std::vector<double>& grid, double threshold = 1.0);

}  // namespace msz
