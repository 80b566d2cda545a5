#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msziarmn/model.hpp"
#include "msziarmn/random.hpp"

namespace msz {

/// Priors. Every unconstrained coefficient gets an independent normal prior;
/// sigma_k is half-normal; Sigma is inverse-Wishart; zeta_k is uniform(0, 1).
struct PriorSpec {
  double intercept_mean = 0.0, intercept_sd = 10.0;  // alpha_0k
  double alpha_mean = 0.0, alpha_sd = 10.0;          // multinomial coefficients
  double eta0_mean = 0.0, eta0_sd = 10.0;            // presence intercepts
  double eta_mean = 0.0, eta_sd = 10.0;              // presence coefficients
  double rho_mean = 0.0, rho_sd = 10.0;              // persistence and interaction
  double sigma_scale = 5.0;                          // half-normal scale of sigma_k
  double iw_df = 0.0;                                // 0 -> K (number of diseases)
  Eigen::MatrixXd iw_scale;                          // empty -> identity
  std::vector<double> initial_presence;              // q_k, fixed; empty -> 1/2

  /// Fills the defaults that depend on the number of non-baseline diseases
  /// and validates; throws ValidationError.
  PriorSpec resolved(int non_baseline) const;
};

struct GibbsConfig {
  int chains = 3;
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 -> one per chain
  int adapt_interval = 50;
  double init_inflation = 1.0;  // over-dispersion of the initial draw
  double init_max_sd = 1.0;     // cap on prior sds used for initial draws
  int init_retries = 20;
  bool likelihood_off = false;  // sample the prior only
  bool update_parameters = true; // false: hold the start point fixed and draw states only
  bool store_phi = false;
  bool store_states = true;
  bool store_cell_loglik = true;

  /// 250,000 iterations with 50,000 burn-in.
  static GibbsConfig full_scale();
  void validate() const;
};

/// Maps a ParameterState to the flat vector stored per draw. Fixed or
/// variant-excluded quantities are omitted; zeta is stored on (0, 1).
struct ParameterLayout {
  std::vector<std::string> names;
  ModelVariant variant = ModelVariant::MsZiarmn;
  int D = 0, N = 0;

  static ParameterLayout make(const Model& model);
  int size() const { return static_cast<int>(names.size()); }
  int index(const std::string& name) const;  // -1 if absent
  std::vector<double> flatten(const ParameterState& p) const;
  /// Writes every stored quantity into `p` (shape must already match); phi is untouched.
  void unflatten(std::span<const double> v, ParameterState& p) const;
};

/// Acceptance and adaptation summary of one chain.
struct AdaptationLedger {
  struct Entry {
    std::string block;
    double acceptance = 0.0;       // post burn-in acceptance rate
    double scale_at_burn_in = 0.0; // proposal scale when adaptation froze
    double scale_final = 0.0;
  };
  std::vector<Entry> entries;
  int sigma_redraws = 0;
};

struct ChainDraws {
  std::size_t draws = 0;
  std::vector<double> params;       // draws x layout.size()
  std::vector<double> phi;          // draws x N*T*D, when stored
  std::vector<std::uint8_t> states; // draws x N*T, when stored
  std::vector<double> cell_loglik;  // draws x N*T (t = 0 entries are 0), when stored
  AdaptationLedger ledger;
};

struct PosteriorDraws {
  ParameterLayout layout;
  ModelVariant variant = ModelVariant::MsZiarmn;
  int N = 0, T = 0, D = 0;
  std::vector<double> initial_presence;
  std::vector<ChainDraws> chains;

  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().draws; }
  std::size_t total_draws() const;
  bool has_phi() const;
  bool has_states() const;
  bool has_cell_loglik() const;

  std::span<const double> param_row(std::size_t chain, std::size_t draw) const;
  /// Per-chain series of one stored parameter.
  std::vector<std::vector<double>> series(int index) const;
  /// Full parameter state for a draw (phi zero unless stored).
  ParameterState state(const CovariateBundle& cov, std::size_t chain, std::size_t draw) const;
  StateSequence state_sequence(std::size_t chain, std::size_t draw) const;
  std::span<const double> cell_loglik(std::size_t chain, std::size_t draw) const;
};

/// Runs the hybrid Gibbs sampler. Step 1 updates parameter blocks in the
/// order: zeta, multinomial coefficients, phi blocks, Sigma, area intercepts
/// and their hyperparameters, presence coefficients. Step 2 draws the state
/// paths by FFBS (skipped for the always-present variant).
PosteriorDraws run_gibbs(const Model& model, const PriorSpec& prior, const GibbsConfig& config,
                         const ParameterState* start = nullptr);

/// Conjugate inverse-Wishart draw of Sigma from the phi scatter matrix
/// sum phi phi' over n cells. Non-SPD draws are re-drawn with jitter and
/// counted in `redraws`.
Eigen::MatrixXd update_sigma(const Eigen::MatrixXd& scatter, long long n, const PriorSpec& prior, Rng& rng,
                             int* redraws = nullptr);
/// Scatter matrix of phi over every (i, t >= 1) cell.
Eigen::MatrixXd phi_scatter(const ParameterState& p);

/// Conjugate normal draw of a population intercept given area intercepts.
double draw_population_intercept(std::span<const double> area_intercepts, double sigma, double prior_mean,
                                 double prior_sd, Rng& rng);

/// R-hat and ESS of every stored parameter.
struct ConvergenceRow {
  std::string name;
  std::optional<double> rhat;
  double ess = 0.0;
};
std::vector<ConvergenceRow> convergence_table(const PosteriorDraws& draws);

}  // namespace msz
