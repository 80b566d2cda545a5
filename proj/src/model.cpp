#include "msziarmn/model.hpp"

#include <cmath>

#include "msziarmn/errors.hpp"
#include "msziarmn/math.hpp"

namespace msz {

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::MsZiarmn: return "MS_ZIARMN";
    case ModelVariant::Ziarmn: return "ZIARMN";
    case ModelVariant::Zeng: return "ZENG";
    case ModelVariant::Armn: return "ARMN";
  }
  return "?";
}

ModelVariant parse_variant(std::string_view name) {
  if (name == "MS_ZIARMN" || name == "MS-ZIARMN") return ModelVariant::MsZiarmn;
  if (name == "ZIARMN") return ModelVariant::Ziarmn;
  if (name == "ZENG") return ModelVariant::Zeng;
  if (name == "ARMN") return ModelVariant::Armn;
  throw ValidationError("unknown model variant '" + std::string(name) + "' (expected MS_ZIARMN, ZIARMN, ZENG or ARMN)");
}

int encode_state(std::span<const int> presence) {
  if (presence.empty() || presence.size() > 7) throw ValidationError("presence vector must have 1..7 entries");
  int s = 0;
  for (std::size_t d = 0; d < presence.size(); ++d) {
    if (presence[d] != 0 && presence[d] != 1) throw ValidationError("presence entries must be 0 or 1");
    if (presence[d] == 0) s |= 1 << d;
  }
  return s + 1;
}

std::vector<int> decode_state(int label, int non_baseline) {
  if (non_baseline < 1 || non_baseline > 7) throw ValidationError("number of non-baseline diseases must be 1..7");
  if (label < 1 || label > state_count(non_baseline))
    throw ValidationError("state label " + std::to_string(label) + " outside 1.." +
                          std::to_string(state_count(non_baseline)));
  std::vector<int> out(non_baseline);
  for (int d = 0; d < non_baseline; ++d) out[d] = state_has(label - 1, d) ? 1 : 0;
  return out;
}

ParameterState ParameterState::zeros(const CovariateBundle& cov) {
  ParameterState p;
  p.D = cov.non_baseline();
  p.N = cov.areas();
  p.T = cov.times();
  p.zeta_logit.assign(p.D + 1, 0.0);
  p.alpha0.assign(p.D, 0.0);
  p.sigma.assign(p.D, 1.0);
  p.area_intercept.assign(static_cast<std::size_t>(p.D) * p.N, 0.0);
  p.alpha.assign(cov.free_alpha_count(), 0.0);
  p.Sigma = Eigen::MatrixXd::Identity(p.D, p.D);
  p.phi.assign(static_cast<std::size_t>(p.N) * p.T * p.D, 0.0);
  p.eta0.assign(p.D, 0.0);
  p.eta.resize(p.D);
  for (int d = 0; d < p.D; ++d) p.eta[d].assign(cov.z_count(d), 0.0);
  p.rho_ar.assign(p.D, 0.0);
  p.rho_di = Eigen::MatrixXd::Zero(p.D, p.D);
  p.initial_presence.assign(p.D, 0.5);
  return p;
}

double ParameterState::zeta(int k) const { return logistic(zeta_logit[k]); }

void ParameterState::set_zeta(int k, double value) {
  if (!(value > 0.0 && value < 1.0)) throw ValidationError("zeta must lie strictly between 0 and 1");
  zeta_logit[k] = logit(value);
}

void ParameterState::validate(const CovariateBundle& cov) const {
  auto fail = [](const std::string& what) { throw ValidationError("parameter state: " + what); };
  if (D != cov.non_baseline() || N != cov.areas() || T != cov.times()) fail("dimensions do not match covariates");
  if (static_cast<int>(zeta_logit.size()) != D + 1) fail("zeta needs K entries");
  if (static_cast<int>(alpha0.size()) != D || static_cast<int>(sigma.size()) != D) fail("alpha0/sigma need K-1 entries");
  if (area_intercept.size() != static_cast<std::size_t>(D) * N) fail("area intercepts need (K-1)*N entries");
  if (static_cast<int>(alpha.size()) != cov.free_alpha_count()) fail("wrong number of multinomial coefficients");
  if (Sigma.rows() != D || Sigma.cols() != D) fail("Sigma must be (K-1)x(K-1)");
  if (phi.size() != static_cast<std::size_t>(N) * T * D) fail("phi needs N*T*(K-1) entries");
  if (static_cast<int>(eta0.size()) != D || static_cast<int>(eta.size()) != D) fail("eta needs K-1 entries");
  for (int d = 0; d < D; ++d)
    if (static_cast<int>(eta[d].size()) != cov.z_count(d)) fail("wrong number of presence coefficients");
  if (static_cast<int>(rho_ar.size()) != D || rho_di.rows() != D || rho_di.cols() != D) fail("rho has wrong shape");
  if (static_cast<int>(initial_presence.size()) != D) fail("initial presence needs K-1 entries");
  for (double q : initial_presence)
    if (!(q >= 0.0 && q <= 1.0)) fail("initial presence probabilities must be in [0,1]");
  for (int d = 0; d < D; ++d)
    if (!(sigma[d] > 0.0)) fail("sigma must be positive");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + Sigma.cwiseAbs().maxCoeff()))
    fail("Sigma must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) fail("Sigma must be positive definite");
}

double relative_odds(double lambda, std::int64_t y_prev_k, std::int64_t y_prev_1, double zeta_k, double zeta_1) {
  return lambda * std::pow(static_cast<double>(y_prev_k) + 1.0, zeta_k) /
         std::pow(static_cast<double>(y_prev_1) + 1.0, zeta_1);
}

double log_lambda(double area_intercept, std::span<const double> x, std::span<const double> alpha, double phi) {
  if (x.size() != alpha.size())
    throw ValidationError("covariate vector has " + std::to_string(x.size()) + " entries but coefficient vector has " +
                          std::to_string(alpha.size()));
  double v = area_intercept + phi;
  for (std::size_t j = 0; j < x.size(); ++j) v += x[j] * alpha[j];
  return v;
}

void log_mixture_probs(int state, std::span<const double> log_lambda_star, std::span<double> out) {
  const int D = static_cast<int>(log_lambda_star.size());
  double m = 0.0;
  for (int d = 0; d < D; ++d)
    if (state_has(state, d) && log_lambda_star[d] > m) m = log_lambda_star[d];
  double s = std::exp(-m);
  for (int d = 0; d < D; ++d)
    if (state_has(state, d)) s += std::exp(log_lambda_star[d] - m);
  const double log_denom = m + std::log(s);
  out[0] = -log_denom;
  for (int d = 0; d < D; ++d) out[d + 1] = state_has(state, d) ? log_lambda_star[d] - log_denom : kLogZero;
}

std::vector<double> mixture_probs(int label, std::span<const double> lambda_star) {
  const int D = static_cast<int>(lambda_star.size());
  if (label < 1 || label > state_count(D)) throw ValidationError("state label out of range");
  std::vector<double> ll(D), lp(D + 1), out(D + 1);
  for (int d = 0; d < D; ++d) ll[d] = std::log(lambda_star[d]);
  log_mixture_probs(label - 1, ll, lp);
  for (int k = 0; k <= D; ++k) out[k] = std::exp(lp[k]);
  return out;
}

double presence_prob(std::span<const double> z, std::span<const double> eta, double eta0,
                     std::span<const int> previous, int d, double rho_ar, std::span<const double> rho_di_into,
                     ModelVariant variant) {
  double lin = eta0;
  switch (variant) {
    case ModelVariant::Armn: return 1.0;
    case ModelVariant::Zeng: return logistic(lin);
    case ModelVariant::Ziarmn:
    case ModelVariant::MsZiarmn:
      if (z.size() != eta.size())
        throw ValidationError("presence covariates have " + std::to_string(z.size()) + " entries, coefficients " +
                              std::to_string(eta.size()));
      for (std::size_t j = 0; j < z.size(); ++j) lin += z[j] * eta[j];
      if (variant == ModelVariant::MsZiarmn) {
        if (previous.size() != rho_di_into.size()) throw ValidationError("previous-state and interaction lengths differ");
        lin += rho_ar * previous[d];
        for (std::size_t j = 0; j < previous.size(); ++j)
          if (static_cast<int>(j) != d) lin += rho_di_into[j] * previous[j];
      }
      return logistic(lin);
  }
  return logistic(lin);
}

double emission_logpmf(std::span<const std::int64_t> y, int label, std::span<const double> lambda_star,
                       std::int64_t total) {
  const int K = static_cast<int>(y.size());
  if (static_cast<int>(lambda_star.size()) != K - 1) throw ValidationError("need K-1 relative odds");
  std::int64_t sum = 0;
  for (auto v : y) sum += v;
  if (sum != total) throw ValidationError("counts sum to " + std::to_string(sum) + " but total is " + std::to_string(total));
  const auto probs = mixture_probs(label, lambda_star);
  double lp = std::lgamma(static_cast<double>(total) + 1.0);
  for (int k = 0; k < K; ++k) {
    if (y[k] == 0) continue;
    if (probs[k] == 0.0) return kLogZero;
    lp += static_cast<double>(y[k]) * std::log(probs[k]) - std::lgamma(static_cast<double>(y[k]) + 1.0);
  }
  return lp;
}

Model::Model(DiseasePanel panel, CovariateBundle cov, ModelVariant variant)
    : panel_(std::move(panel)),
      cov_(std::move(cov)),
      variant_(variant),
      K_(panel_.diseases()),
      N_(panel_.areas()),
      T_(panel_.times()),
      S_(has_latent_states(variant) ? state_count(panel_.diseases() - 1) : 1) {
  if (cov_.non_baseline() != K_ - 1 || cov_.areas() != N_ || cov_.times() != T_)
    throw ValidationError("covariate bundle shape does not match the panel");
  if (K_ - 1 > 7) throw ValidationError("at most 8 diseases are supported");
  lag_.assign(static_cast<std::size_t>(K_) * N_ * T_, 0.0);
  coef_.assign(static_cast<std::size_t>(N_) * T_, 0.0);
  positive_mask_.assign(static_cast<std::size_t>(N_) * T_, 0);
  for (int i = 0; i < N_; ++i)
    for (int t = 0; t < T_; ++t) {
      double c = std::lgamma(static_cast<double>(panel_.total(i, t)) + 1.0);
      int mask = 0;
      for (int k = 0; k < K_; ++k) {
        const auto y = panel_.count(k, i, t);
        c -= std::lgamma(static_cast<double>(y) + 1.0);
        if (k > 0 && y > 0) mask |= 1 << (k - 1);
        if (t > 0) lag_[(static_cast<std::size_t>(k) * N_ + i) * T_ + t] = std::log1p(static_cast<double>(panel_.count(k, i, t - 1)));
      }
      coef_[static_cast<std::size_t>(i) * T_ + t] = c;
      positive_mask_[static_cast<std::size_t>(i) * T_ + t] = mask;
    }
}

double Model::linear_predictor(const ParameterState& p, int d, int i, int t) const {
  const auto x = cov_.x_row(d, i, t);
  const auto& map = cov_.alpha_map(d);
  double v = p.area_int(d, i) + p.phi_cell(i, t)[d];
  for (std::size_t j = 0; j < x.size(); ++j) v += x[j] * p.alpha[map[j]];
  return v;
}

void Model::log_lambda_star(const ParameterState& p, int i, int t, std::span<double> out) const {
  const double base = p.zeta(0) * lag_log(0, i, t);
  for (int d = 0; d < D(); ++d) out[d] = linear_predictor(p, d, i, t) + p.zeta(d + 1) * lag_log(d + 1, i, t) - base;
}

double Model::emission_loglik(int i, int t, int state, std::span<const double> llstar) const {
  if (!allowed(i, t, state)) return kLogZero;
  const int D = this->D();
  double m = 0.0;
  for (int d = 0; d < D; ++d)
    if (state_has(state, d) && llstar[d] > m) m = llstar[d];
  double s = std::exp(-m);
  for (int d = 0; d < D; ++d)
    if (state_has(state, d)) s += std::exp(llstar[d] - m);
  const double log_denom = m + std::log(s);
  double lp = log_multinomial_coef(i, t) - static_cast<double>(panel_.total(i, t)) * log_denom;
  for (int d = 0; d < D; ++d) {
    const auto y = panel_.count(d + 1, i, t);
    if (y > 0) lp += static_cast<double>(y) * llstar[d];
  }
  return lp;
}

double Model::emission_loglik(const ParameterState& p, int i, int t, int state) const {
  double buf[8];
  log_lambda_star(p, i, t, {buf, static_cast<std::size_t>(D())});
  return emission_loglik(i, t, state, {buf, static_cast<std::size_t>(D())});
}

void Model::emission_logliks(const ParameterState& p, int i, int t, std::span<double> out) const {
  double buf[8];
  std::span<const double> ll{buf, static_cast<std::size_t>(D())};
  log_lambda_star(p, i, t, {buf, static_cast<std::size_t>(D())});
  for (int s = 0; s < S_; ++s) out[s] = emission_loglik(i, t, s, ll);
}

double presence_logit(const ParameterState& p, std::span<const double> z, ModelVariant variant, int d,
                      int previous_state) {
  double lin = p.eta0[d];
  if (variant == ModelVariant::Zeng || variant == ModelVariant::Armn) return lin;
  for (std::size_t j = 0; j < z.size(); ++j) lin += z[j] * p.eta[d][j];
  if (variant == ModelVariant::MsZiarmn) {
    for (int j = 0; j < p.D; ++j) {
      if (!state_has(previous_state, j)) continue;
      lin += j == d ? p.rho_ar[d] : p.rho_di(j, d);
    }
  }
  return lin;
}

double Model::presence_logit(const ParameterState& p, int d, int i, int t, int previous_state) const {
  return msz::presence_logit(p, cov_.z_row(d, i, t), variant_, d, previous_state);
}

Eigen::MatrixXd Model::transition_matrix(const ParameterState& p, int i, int t) const {
  if (t < 1) throw ValidationError("transition matrices start at the second time point");
  Eigen::MatrixXd G(S_, S_);
  if (S_ == 1) {
    G(0, 0) = 1.0;
    return G;
  }
  const int D = this->D();
  double lp1[8], lp0[8];
  for (int prev = 0; prev < S_; ++prev) {
    for (int d = 0; d < D; ++d) {
      const double eta = presence_logit(p, d, i, t, prev);
      lp1[d] = log_logistic(eta);
      lp0[d] = log_logistic(-eta);
    }
    for (int next = 0; next < S_; ++next) {
      double l = 0.0;
      for (int d = 0; d < D; ++d) l += state_has(next, d) ? lp1[d] : lp0[d];
      G(prev, next) = std::exp(l);
    }
  }
  return G;
}

Eigen::VectorXd Model::initial_distribution(const ParameterState& p, int i) const {
  Eigen::VectorXd pi(S_);
  if (S_ == 1) {
    pi(0) = 1.0;
    return pi;
  }
  for (int s = 0; s < S_; ++s) {
    double v = allowed(i, 0, s) ? 1.0 : 0.0;
    for (int d = 0; d < D(); ++d) v *= state_has(s, d) ? p.initial_presence[d] : 1.0 - p.initial_presence[d];
    pi(s) = v;
  }
  const double z = pi.sum();
  if (!(z > 0.0))
    throw NumericalError("initial presence probabilities give zero mass to the counts observed at area " +
                         std::to_string(i + 1) + ", time 1");
  return pi / z;
}

double Model::complete_data_loglik(const StateSequence& s, const ParameterState& p) const {
  if (s.N != N_ || s.T != T_) throw ValidationError("state sequence shape does not match the panel");
  if (S_ == 1) {
    for (int i = 0; i < N_; ++i)
      for (int t = 0; t < T_; ++t)
        if (s.at(i, t) != 0) return kLogZero;
  }
  double total = 0.0;
  for (int i = 0; i < N_; ++i) {
    total += std::log(initial_distribution(p, i)(s.at(i, 0)));
    for (int t = 1; t < T_; ++t) {
      const int cur = s.at(i, t);
      total += emission_loglik(p, i, t, cur);
      if (S_ > 1) {
        const int prev = s.at(i, t - 1);
        for (int d = 0; d < D(); ++d) {
          const double eta = presence_logit(p, d, i, t, prev);
          total += log_logistic(state_has(cur, d) ? eta : -eta);
        }
      }
    }
  }
  return total;
}

}  // namespace msz
