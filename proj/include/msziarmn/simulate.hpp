#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msziarmn/covariates.hpp"
#include "msziarmn/model.hpp"
#include "msziarmn/panel.hpp"
#include "msziarmn/random.hpp"

namespace msz {

// ---------------------------------------------------------------------------
// Panels from the multinomial model
// ---------------------------------------------------------------------------

/// Shape and fixed inputs of a simulated panel. The multinomial model does
/// not generate totals: they are either supplied (N x T, [i * T + t]) or
/// drawn from a negative binomial with the given mean and size.
struct SimulationDesign {
  std::vector<std::string> disease_names;  // K, baseline first
  int N = 0, T = 0;
  CovariateBundle covariates;              // exogenous x and z per non-baseline disease
  std::vector<std::int64_t> totals;        // optional
  double total_mean = 10.0;
  double total_size = 5.0;

  void validate() const;
};

struct SimulatedPanel {
  DiseasePanel panel;
  StateSequence states;   // all present for the always-present variant
  ParameterState truth;   // the generating parameters with the drawn phi
};

/// Forward simulation: the first time uses the initial presence
/// probabilities and lag terms of zero; later times draw states from the
/// presence chain, phi ~ MVN(0, Sigma) and counts ~ Multinom(pi, total).
/// The phi passed in is ignored.
SimulatedPanel simulate_panel(const SimulationDesign& design, const ParameterState& params, ModelVariant variant,
                              Rng& rng);

// ---------------------------------------------------------------------------
// Multivariate Reed-Frost
// ---------------------------------------------------------------------------

/// Poisson chain-binomial approximation with
///   Phi_kit = (delta_ki(t-1) / pop_i) R_kit (y_ki(t-1) + 1)^zeta_k (sum_j w_ji y_kj(t-1) + 1)^beta_ne_k,
///   log R_kit = beta0_ki + xbeta_kit + psi_kit + b_it.
struct ReedFrostParams {
  int K = 0, N = 0, T = 0;
  std::vector<double> beta0;          // [k * N + i]
  std::vector<double> xbeta;          // [(k * N + i) * T + t], optional covariate contribution
  Eigen::MatrixXd sigma_rf;           // K x K covariance of psi_kit (PSD)
  double shared_sd = 0.0;             // sd of the common factor b_it
  std::vector<double> zeta;           // K mixing exponents
  std::vector<double> population;     // N
  std::vector<double> susceptible;    // [k * N + i] at the first time; empty -> population
  bool deplete = false;               // subtract cases from the susceptibles
  AreaMetadata neighbors;             // optional spatial spread
  std::vector<double> beta_ne;        // K exponents (empty -> 0)
  double mean_cap = 1e6;              // ceiling on conditional means

  void validate() const;
};

struct ReedFrostResult {
  int K = 0, N = 0, T = 0;
  std::vector<std::int64_t> counts;   // [(k * N + i) * T + t]
  std::vector<double> means;          // conditional means, same layout (first time 0)
  std::vector<std::array<int, 3>> capped;  // (k, i, t) cells whose mean hit the ceiling

  DiseasePanel to_panel(const std::vector<std::string>& disease_names) const;
};

ReedFrostResult simulate_reed_frost(const ReedFrostParams& params, const std::vector<std::int64_t>& initial_counts,
                                    Rng& rng);

/// Conditional means at (i, t >= 1) given the previous counts, with psi and b supplied.
std::vector<double> reed_frost_means(const ReedFrostParams& params, std::span<const std::int64_t> counts, int i,
                                     int t, std::span<const double> psi, double b,
                                     std::span<const double> susceptible);

/// Result of the Poisson -> multinomial conditioning check.
struct ConditioningReport {
  std::int64_t total = 0;
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  double tv_distance = 0.0;
  std::vector<double> pi;  // Phi_k / sum Phi
};

/// Draws independent Poisson(Phi_k) vectors until `draws` of them sum to
/// `total`, and compares their empirical distribution with Multinom(pi, total).
/// Throws NumericalError when the acceptance rate falls below 1e-4.
ConditioningReport check_conditioning_identity(std::span<const double> phi, std::int64_t total, std::size_t draws,
                                               Rng& rng);

/// Maximum discrepancies of the Reed-Frost -> multinomial parameter mapping
/// over random configurations: pi two ways, and the mapped Sigma both as
/// A Sigma_RF A' and elementwise.
struct MappingReport {
  int configurations = 0;
  double max_pi_error = 0.0;
  double max_sigma_error = 0.0;
};
MappingReport check_parameter_mapping(int K, int configurations, Rng& rng);

/// Sigma of the multinomial model implied by the Reed-Frost covariance:
/// Sigma_kj = S_kj - S_k1 - S_j1 + S_11 over non-baseline k, j.
Eigen::MatrixXd mapped_sigma(const Eigen::MatrixXd& sigma_rf);

// ---------------------------------------------------------------------------
// Random-effect correlation study
// ---------------------------------------------------------------------------

struct CorrelationPoint {
  double rho = 0.0;
  double corr = 0.0;
  double mc_se = 0.0;
};

struct CorrelationStudy {
  std::vector<CorrelationPoint> curve;
  double baseline = 0.0;
  std::optional<double> crossing;  // first rho where the curve meets the baseline
};

/// corr(y2, y3 | total) of (y1, y2, y3) ~ Multinom((1, e^{a2+phi2}, e^{a3+phi3}) / sum, total) marginally over
/// (phi2, phi3) ~ N(0, [[s2^2, rho s2 s3], [rho s2 s3, s3^2]]), per grid point.
CorrelationStudy correlation_study(double alpha02, double alpha03, double sigma2, double sigma3, std::int64_t total,
                                   const std::vector<double>& rho_grid, std::size_t draws, Rng& rng);

/// Closed form without random effects: -sqrt(pi2 pi3 / ((1 - pi2)(1 - pi3))).
double baseline_correlation(double alpha02, double alpha03);

}  // namespace msz
