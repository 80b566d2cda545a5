#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msziarmn/covariates.hpp"
#include "msziarmn/panel.hpp"

namespace msz {

/// The four nested model variants.
///  - MsZiarmn: coupled Markov presence chains with covariates.
///  - Ziarmn:   presence depends on covariates only (no persistence or interaction).
///  - Zeng:     presence probability constant per disease.
///  - Armn:     no zero inflation; every disease always present.
enum class ModelVariant { MsZiarmn, Ziarmn, Zeng, Armn };

std::string_view to_string(ModelVariant v);
ModelVariant parse_variant(std::string_view name);

inline bool has_latent_states(ModelVariant v) { return v != ModelVariant::Armn; }
inline bool uses_presence_covariates(ModelVariant v) {
  return v == ModelVariant::MsZiarmn || v == ModelVariant::Ziarmn;
}
inline bool uses_persistence(ModelVariant v) { return v == ModelVariant::MsZiarmn; }

// ---------------------------------------------------------------------------
// State encoding. With D = K - 1 non-baseline diseases there are 2^D joint
// presence vectors. Labels run 1..2^D; label - 1 has bit d set when disease
// d + 1 is ABSENT, which for K = 3 gives (1,1)->1, (0,1)->2, (1,0)->3, (0,0)->4.
// Internally the 0-based index (label - 1) is used throughout.
// ---------------------------------------------------------------------------

inline int state_count(int non_baseline) { return 1 << non_baseline; }
inline bool state_has(int state, int d) { return ((state >> d) & 1) == 0; }

/// Presence bits s_2..s_K -> label in 1..2^(K-1).
int encode_state(std::span<const int> presence);
/// Label in 1..2^(K-1) -> presence bits; throws ValidationError outside the range.
std::vector<int> decode_state(int label, int non_baseline);

/// All model parameters at one point of parameter space.
///
/// Non-baseline diseases are indexed d = 0..D-1 (disease d + 1 overall).
/// The mixing exponents are stored on the logit scale so that samplers move on
/// an unconstrained space.
struct ParameterState {
  int D = 0, N = 0, T = 0;

  std::vector<double> zeta_logit;       // K entries, baseline first
  std::vector<double> alpha0;           // population intercepts, D
  std::vector<double> sigma;            // random-intercept sds, D
  std::vector<double> area_intercept;   // [d * N + i]
  std::vector<double> alpha;            // free multinomial coefficients
  Eigen::MatrixXd Sigma;                // D x D covariance of phi
  std::vector<double> phi;              // [(i * T + t) * D + d], t = 0 unused
  std::vector<double> eta0;             // presence intercepts, D
  std::vector<std::vector<double>> eta; // presence coefficients per d
  std::vector<double> rho_ar;           // self-persistence, D
  Eigen::MatrixXd rho_di;               // (j, d): effect of j's previous presence on d; diagonal unused
  std::vector<double> initial_presence; // q_d, D

  /// All-zero parameters (zeta = 1/2, Sigma = I, q = 1/2) shaped for the bundle.
  static ParameterState zeros(const CovariateBundle& cov);

  double zeta(int k) const;
  void set_zeta(int k, double value);

  double& area_int(int d, int i) { return area_intercept[static_cast<std::size_t>(d) * N + i]; }
  double area_int(int d, int i) const { return area_intercept[static_cast<std::size_t>(d) * N + i]; }
  double* phi_cell(int i, int t) { return phi.data() + (static_cast<std::size_t>(i) * T + t) * D; }
  const double* phi_cell(int i, int t) const { return phi.data() + (static_cast<std::size_t>(i) * T + t) * D; }

  /// Throws ValidationError on wrong shapes or a non-SPD Sigma.
  void validate(const CovariateBundle& cov) const;
};

/// Joint presence states for every (area, time), as 0-based state indices.
struct StateSequence {
  int N = 0, T = 0, D = 0;
  std::vector<std::uint8_t> index;  // [i * T + t]

  StateSequence() = default;
  StateSequence(int n, int t, int d) : N(n), T(t), D(d), index(static_cast<std::size_t>(n) * t, 0) {}

  int at(int i, int t) const { return index[static_cast<std::size_t>(i) * T + t]; }
  void set(int i, int t, int s) { index[static_cast<std::size_t>(i) * T + t] = static_cast<std::uint8_t>(s); }
  int label(int i, int t) const { return at(i, t) + 1; }
  bool present(int d, int i, int t) const { return state_has(at(i, t), d); }
};

// ---------------------------------------------------------------------------
// Pointwise formulas.
// ---------------------------------------------------------------------------

/// lambda * (y_prev_k + 1)^zeta_k / (y_prev_1 + 1)^zeta_1.
double relative_odds(double lambda, std::int64_t y_prev_k, std::int64_t y_prev_1, double zeta_k, double zeta_1);

/// alpha_0ki + x' alpha_k + phi_kit. Throws ValidationError on length mismatch.
double log_lambda(double area_intercept, std::span<const double> x, std::span<const double> alpha, double phi);

/// Multinomial probabilities (length K) under the state with the given label;
/// absent diseases get exactly zero.
std::vector<double> mixture_probs(int label, std::span<const double> lambda_star);

/// Same, on the log scale from log(lambda*), into `out` (length D + 1).
void log_mixture_probs(int state, std::span<const double> log_lambda_star, std::span<double> out);

/// Presence probability p_kit for non-baseline disease d given the previous
/// joint presence (length D), honouring the variant's constraints.
/// `rho_di_into` holds rho_{j,d} for every j (entry d is ignored).
double presence_prob(std::span<const double> z, std::span<const double> eta, double eta0,
                     std::span<const int> previous, int d, double rho_ar, std::span<const double> rho_di_into,
                     ModelVariant variant);

/// logit(p_kit) of disease d from the parameter state, the presence
/// covariates of the cell and the previous joint state.
double presence_logit(const ParameterState& p, std::span<const double> z, ModelVariant variant, int d,
                      int previous_state);

/// Multinomial log-pmf of y (length K) under the state with the given label;
/// -inf when an absent disease has positive count. Throws on total mismatch.
double emission_logpmf(std::span<const std::int64_t> y, int label, std::span<const double> lambda_star,
                       std::int64_t total);

/// Binds a panel, its covariates and a variant, and evaluates every model
/// quantity that depends on data. Immutable and safe to share across threads.
class Model {
 public:
  Model(DiseasePanel panel, CovariateBundle cov, ModelVariant variant);

  const DiseasePanel& panel() const { return panel_; }
  const CovariateBundle& covariates() const { return cov_; }
  ModelVariant variant() const { return variant_; }

  int K() const { return K_; }
  int D() const { return K_ - 1; }
  int N() const { return N_; }
  int T() const { return T_; }
  /// 2^D with latent states, 1 for the always-present variant.
  int states() const { return S_; }

  /// log(y[k][i][t-1] + 1) for t >= 1.
  double lag_log(int k, int i, int t) const { return lag_[(static_cast<std::size_t>(k) * N_ + i) * T_ + t]; }
  double log_multinomial_coef(int i, int t) const { return coef_[static_cast<std::size_t>(i) * T_ + t]; }
  /// True if state s is compatible with the counts at (i, t).
  bool allowed(int i, int t, int s) const { return (s & positive_mask_[static_cast<std::size_t>(i) * T_ + t]) == 0; }

  /// Linear predictor alpha_0ki + x' alpha + phi (no autoregressive terms), t >= 1.
  double linear_predictor(const ParameterState& p, int d, int i, int t) const;
  /// log(lambda*) for every non-baseline disease at (i, t >= 1).
  void log_lambda_star(const ParameterState& p, int i, int t, std::span<double> out) const;

  /// Emission log-likelihood for a state given log(lambda*) at (i, t).
  double emission_loglik(int i, int t, int state, std::span<const double> log_lambda_star) const;
  double emission_loglik(const ParameterState& p, int i, int t, int state) const;
  /// Emission log-likelihoods for every state at (i, t >= 1).
  void emission_logliks(const ParameterState& p, int i, int t, std::span<double> out) const;

  /// logit(p) of presence for disease d at (i, t >= 1) given the previous state.
  double presence_logit(const ParameterState& p, int d, int i, int t, int previous_state) const;
  /// Row-stochastic transition matrix between states from t - 1 to t.
  Eigen::MatrixXd transition_matrix(const ParameterState& p, int i, int t) const;
  /// Initial state distribution of area i: the product of independent
  /// Bernoulli(q_d), restricted to states compatible with the counts at the
  /// first time and renormalised. Throws NumericalError if no compatible
  /// state has prior mass.
  Eigen::VectorXd initial_distribution(const ParameterState& p, int i) const;

  /// log p(S*, y | v), restricted to times t >= 1 for emission and transition
  /// terms plus the initial-state log-probability.
  double complete_data_loglik(const StateSequence& s, const ParameterState& p) const;

  /// State sequence with every disease present everywhere.
  StateSequence all_present() const { return StateSequence(N_, T_, D()); }

 private:
  DiseasePanel panel_;
  CovariateBundle cov_;
  ModelVariant variant_;
  int K_, N_, T_, S_;
  std::vector<double> lag_;
  std::vector<double> coef_;
  std::vector<int> positive_mask_;
};

}  // namespace msz
