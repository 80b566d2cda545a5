#include "msziarmn/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "msziarmn/diagnostics.hpp"
#include "msziarmn/errors.hpp"
#include "msziarmn/ffbs.hpp"
#include "msziarmn/math.hpp"
#include "msziarmn/mcmc.hpp"

namespace msz {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

PriorSpec PriorSpec::resolved(int D) const {
  PriorSpec p = *this;
  if (p.iw_df == 0.0) p.iw_df = D + 1;
  if (p.iw_scale.size() == 0) p.iw_scale = Eigen::MatrixXd::Identity(D, D);
  if (p.initial_presence.empty()) p.initial_presence.assign(D, 0.5);
  for (double sd : {p.intercept_sd, p.alpha_sd, p.eta0_sd, p.eta_sd, p.rho_sd, p.sigma_scale})
    if (!(sd > 0.0) || !std::isfinite(sd)) throw ValidationError("prior scales must be positive and finite");
  if (p.iw_df < D) throw ValidationError("inverse-Wishart degrees of freedom must be at least K-1");
  if (p.iw_scale.rows() != D || p.iw_scale.cols() != D) throw ValidationError("inverse-Wishart scale must be (K-1)x(K-1)");
  Eigen::LLT<Eigen::MatrixXd> llt(p.iw_scale);
  if (llt.info() != Eigen::Success || !p.iw_scale.isApprox(p.iw_scale.transpose()))
    throw ValidationError("inverse-Wishart scale must be symmetric positive definite");
  if (static_cast<int>(p.initial_presence.size()) != D)
    throw ValidationError("need one initial presence probability per non-baseline disease");
  for (double q : p.initial_presence)
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("initial presence probabilities must lie in [0, 1]");
  return p;
}

GibbsConfig GibbsConfig::full_scale() {
  GibbsConfig c;
  c.iterations = 250000;
  c.burn_in = 50000;
  c.thin = 50;
  return c;
}

void GibbsConfig::validate() const {
  if (chains < 1) throw ValidationError("chains must be >= 1");
  if (burn_in < 0 || iterations < burn_in) throw ValidationError("need iterations >= burn_in >= 0");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (adapt_interval < 2) throw ValidationError("adapt_interval must be >= 2");
  if (!(init_inflation > 0.0) || !(init_max_sd > 0.0)) throw ValidationError("initial spread must be positive");
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

ParameterLayout ParameterLayout::make(const Model& m) {
  ParameterLayout L;
  L.variant = m.variant();
  L.D = m.D();
  L.N = m.N();
  const auto& cov = m.covariates();
  const auto& dn = m.panel().disease_names();
  const auto& names = cov.disease_names();
  for (int k = 0; k < m.K(); ++k) L.names.push_back("zeta[" + dn[k] + "]");
  for (int d = 0; d < L.D; ++d) L.names.push_back("alpha0[" + names[d] + "]");
  for (int d = 0; d < L.D; ++d) L.names.push_back("sigma[" + names[d] + "]");
  for (const auto& a : cov.free_alpha_names()) L.names.push_back("alpha[" + a + "]");
  for (int a = 0; a < L.D; ++a)
    for (int b = a; b < L.D; ++b) L.names.push_back("Sigma[" + names[a] + ":" + names[b] + "]");
  if (has_latent_states(L.variant)) {
    for (int d = 0; d < L.D; ++d) {
      L.names.push_back("eta0[" + names[d] + "]");
      if (uses_presence_covariates(L.variant))
        for (const auto& z : cov.z_names(d)) L.names.push_back("eta[" + names[d] + ":" + z + "]");
      if (uses_persistence(L.variant)) {
        L.names.push_back("rho_ar[" + names[d] + "]");
        for (int j = 0; j < L.D; ++j)
          if (j != d) L.names.push_back("rho_di[" + names[j] + "->" + names[d] + "]");
      }
    }
  }
  for (int d = 0; d < L.D; ++d)
    for (int i = 0; i < L.N; ++i) L.names.push_back("alpha0i[" + names[d] + ":" + m.panel().area_labels()[i] + "]");
  return L;
}

int ParameterLayout::index(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

std::vector<double> ParameterLayout::flatten(const ParameterState& p) const {
  std::vector<double> v;
  v.reserve(names.size());
  for (std::size_t k = 0; k < p.zeta_logit.size(); ++k) v.push_back(p.zeta(static_cast<int>(k)));
  for (int d = 0; d < D; ++d) v.push_back(p.alpha0[d]);
  for (int d = 0; d < D; ++d) v.push_back(p.sigma[d]);
  for (double a : p.alpha) v.push_back(a);
  for (int a = 0; a < D; ++a)
    for (int b = a; b < D; ++b) v.push_back(p.Sigma(a, b));
  if (has_latent_states(variant)) {
    for (int d = 0; d < D; ++d) {
      v.push_back(p.eta0[d]);
      if (uses_presence_covariates(variant))
        for (double e : p.eta[d]) v.push_back(e);
      if (uses_persistence(variant)) {
        v.push_back(p.rho_ar[d]);
        for (int j = 0; j < D; ++j)
          if (j != d) v.push_back(p.rho_di(j, d));
      }
    }
  }
  for (double a : p.area_intercept) v.push_back(a);
  if (v.size() != names.size()) throw ValidationError("parameter state does not match the layout");
  return v;
}

void ParameterLayout::unflatten(std::span<const double> v, ParameterState& p) const {
  if (v.size() != names.size()) throw ValidationError("draw width does not match the layout");
  std::size_t n = 0;
  for (std::size_t k = 0; k < p.zeta_logit.size(); ++k) p.zeta_logit[k] = logit(v[n++]);
  for (int d = 0; d < D; ++d) p.alpha0[d] = v[n++];
  for (int d = 0; d < D; ++d) p.sigma[d] = v[n++];
  for (double& a : p.alpha) a = v[n++];
  for (int a = 0; a < D; ++a)
    for (int b = a; b < D; ++b) p.Sigma(a, b) = p.Sigma(b, a) = v[n++];
  if (has_latent_states(variant)) {
    for (int d = 0; d < D; ++d) {
      p.eta0[d] = v[n++];
      if (uses_presence_covariates(variant))
        for (double& e : p.eta[d]) e = v[n++];
      if (uses_persistence(variant)) {
        p.rho_ar[d] = v[n++];
        for (int j = 0; j < D; ++j)
          if (j != d) p.rho_di(j, d) = v[n++];
      }
    }
  }
  for (double& a : p.area_intercept) a = v[n++];
}

// ---------------------------------------------------------------------------
// Draw containers
// ---------------------------------------------------------------------------

std::size_t PosteriorDraws::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.draws;
  return n;
}
bool PosteriorDraws::has_phi() const { return !chains.empty() && chains[0].draws > 0 && !chains[0].phi.empty(); }
bool PosteriorDraws::has_states() const {
  return !chains.empty() && chains[0].draws > 0 && !chains[0].states.empty();
}
bool PosteriorDraws::has_cell_loglik() const {
  return !chains.empty() && chains[0].draws > 0 && !chains[0].cell_loglik.empty();
}

std::span<const double> PosteriorDraws::param_row(std::size_t c, std::size_t m) const {
  const auto w = static_cast<std::size_t>(layout.size());
  return {chains.at(c).params.data() + m * w, w};
}

std::vector<std::vector<double>> PosteriorDraws::series(int index) const {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    std::vector<double> s(chains[c].draws);
    for (std::size_t m = 0; m < chains[c].draws; ++m) s[m] = param_row(c, m)[index];
    out.push_back(std::move(s));
  }
  return out;
}

ParameterState PosteriorDraws::state(const CovariateBundle& cov, std::size_t c, std::size_t m) const {
  auto p = ParameterState::zeros(cov);
  layout.unflatten(param_row(c, m), p);
  p.initial_presence = initial_presence;
  if (has_phi()) {
    const std::size_t w = p.phi.size();
    std::copy_n(chains.at(c).phi.data() + m * w, w, p.phi.data());
  }
  return p;
}

StateSequence PosteriorDraws::state_sequence(std::size_t c, std::size_t m) const {
  StateSequence s(N, T, D);
  if (!has_states()) return s;
  const std::size_t w = static_cast<std::size_t>(N) * T;
  std::copy_n(chains.at(c).states.data() + m * w, w, s.index.data());
  return s;
}

std::span<const double> PosteriorDraws::cell_loglik(std::size_t c, std::size_t m) const {
  const std::size_t w = static_cast<std::size_t>(N) * T;
  return {chains.at(c).cell_loglik.data() + m * w, w};
}

// ---------------------------------------------------------------------------
// Conjugate pieces
// ---------------------------------------------------------------------------

Eigen::MatrixXd phi_scatter(const ParameterState& p) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p.D, p.D);
  for (int i = 0; i < p.N; ++i)
    for (int t = 1; t < p.T; ++t) {
      Eigen::Map<const Eigen::VectorXd> f(p.phi_cell(i, t), p.D);
      S.noalias() += f * f.transpose();
    }
  return S;
}

Eigen::MatrixXd update_sigma(const Eigen::MatrixXd& scatter, long long n, const PriorSpec& prior, Rng& rng,
                             int* redraws) {
  const int D = static_cast<int>(scatter.rows());
  const PriorSpec pr = prior.resolved(D);
  Eigen::MatrixXd scale = pr.iw_scale + scatter;
  for (int attempt = 0; attempt < 20; ++attempt) {
    Eigen::MatrixXd draw = inverse_wishart_draw(rng, pr.iw_df + static_cast<double>(n), scale);
    Eigen::LLT<Eigen::MatrixXd> llt(draw);
    if (llt.info() == Eigen::Success && draw.allFinite()) return draw;
    if (redraws) ++*redraws;
    scale += Eigen::MatrixXd::Identity(D, D) * 1e-10 * std::pow(10.0, attempt) * scale.trace() / D;
  }
  throw NumericalError("Sigma update failed to produce a positive definite draw");
}

double draw_population_intercept(std::span<const double> a, double sigma, double m0, double s0, Rng& rng) {
  const double prec = 1.0 / (s0 * s0) + a.size() / (sigma * sigma);
  const double sum = std::accumulate(a.begin(), a.end(), 0.0);
  const double mean = (m0 / (s0 * s0) + sum / (sigma * sigma)) / prec;
  return mean + standard_normal(rng) / std::sqrt(prec);
}

// ---------------------------------------------------------------------------
// One chain
// ---------------------------------------------------------------------------

namespace {

inline double normal_lp(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z;
}

class Chain {
 public:
  Chain(const Model& m, const PriorSpec& prior, const GibbsConfig& cfg, const ParameterLayout& layout, int id,
        const ParameterState* start)
      : m_(m),
        pr_(prior),
        cfg_(cfg),
        layout_(layout),
        rng_(make_stream(cfg.seed, static_cast<std::uint64_t>(id))),
        K_(m.K()),
        D_(m.D()),
        N_(m.N()),
        T_(m.T()),
        lik_(!cfg.likelihood_off) {
    lag_mean_.assign(static_cast<std::size_t>(K_) * N_, 0.0);
    for (int k = 0; k < K_; ++k)
      for (int i = 0; i < N_; ++i) {
        double s = 0.0;
        for (int t = 1; t < T_; ++t) s += m.lag_log(k, i, t);
        lag_mean_[static_cast<std::size_t>(k) * N_ + i] = s / (T_ - 1);
      }
    initialise(start);
    setup_adaptation();
  }

  ChainDraws run() {
    ChainDraws out;
    const std::size_t keep = static_cast<std::size_t>((cfg_.iterations - cfg_.burn_in) / cfg_.thin);
    const std::size_t cells = static_cast<std::size_t>(N_) * T_;
    out.params.reserve(keep * layout_.size());
    if (cfg_.store_phi) out.phi.reserve(keep * cells * D_);
    const bool latent = has_latent_states(m_.variant());
    if (cfg_.store_states && latent) out.states.reserve(keep * cells);
    if (cfg_.store_cell_loglik) out.cell_loglik.reserve(keep * cells);

    if (cfg_.burn_in == 0) freeze();
    for (int it = 0; it < cfg_.iterations; ++it) {
      if (cfg_.update_parameters) step_parameters();
      step_states();
      if (it + 1 == cfg_.burn_in) freeze();
      if (it >= cfg_.burn_in && (it - cfg_.burn_in + 1) % cfg_.thin == 0) {
        auto v = layout_.flatten(p_);
        out.params.insert(out.params.end(), v.begin(), v.end());
        if (cfg_.store_phi) out.phi.insert(out.phi.end(), p_.phi.begin(), p_.phi.end());
        if (cfg_.store_states && latent) out.states.insert(out.states.end(), s_.index.begin(), s_.index.end());
        if (cfg_.store_cell_loglik) out.cell_loglik.insert(out.cell_loglik.end(), cell_ll_.begin(), cell_ll_.end());
        ++out.draws;
      }
    }
    out.ledger = ledger();
    return out;
  }

 private:
  // ---- caches ----
  std::size_t cell(int i, int t) const { return static_cast<std::size_t>(i) * T_ + t; }
  double* ll_at(int i, int t) { return ll_.data() + cell(i, t) * D_; }

  void refresh_cache() {
    ll_.assign(static_cast<std::size_t>(N_) * T_ * D_, 0.0);
    em_.assign(static_cast<std::size_t>(N_) * T_, 0.0);
    for (int i = 0; i < N_; ++i)
      for (int t = 1; t < T_; ++t) {
        m_.log_lambda_star(p_, i, t, {ll_at(i, t), static_cast<std::size_t>(D_)});
        em_[cell(i, t)] = lik_ ? cell_emission(i, t, ll_at(i, t)) : 0.0;
      }
  }

  double cell_emission(int i, int t, const double* ll) const {
    return m_.emission_loglik(i, t, s_.at(i, t), {ll, static_cast<std::size_t>(D_)});
  }

  // ---- initialisation ----
  void initialise(const ParameterState* start) {
    const auto& cov = m_.covariates();
    for (int attempt = 0; attempt <= cfg_.init_retries; ++attempt) {
      if (start) {
        p_ = *start;
      } else {
        p_ = ParameterState::zeros(cov);
        draw_initial();
      }
      p_.initial_presence = pr_.initial_presence;
      p_.validate(cov);
      initial_states();
      set_sigma_tables();
      refresh_cache();
      cell_ll_.assign(static_cast<std::size_t>(N_) * T_, 0.0);
      double lp;
      try {
        lp = m_.complete_data_loglik(s_, p_);
      } catch (const NumericalError&) {
        lp = kLogZero;
      }
      if (std::isfinite(lp) || !lik_) return;
      if (start) break;
    }
    throw NumericalError("could not find an initial state with finite log-posterior");
  }

  double init_sd(double prior_sd) const { return std::min(prior_sd, cfg_.init_max_sd) * cfg_.init_inflation; }

  void draw_initial() {
    auto& r = rng_;
    for (int k = 0; k < K_; ++k) p_.set_zeta(k, 0.05 + 0.9 * uniform01(r));
    for (int d = 0; d < D_; ++d) {
      p_.alpha0[d] = pr_.intercept_mean + init_sd(pr_.intercept_sd) * standard_normal(r);
      p_.sigma[d] = (0.3 + 0.7 * uniform01(r)) * cfg_.init_inflation;
      for (int i = 0; i < N_; ++i) p_.area_int(d, i) = p_.alpha0[d] + p_.sigma[d] * standard_normal(r);
    }
    for (double& a : p_.alpha) a = pr_.alpha_mean + init_sd(pr_.alpha_sd) * standard_normal(r);
    p_.Sigma = Eigen::MatrixXd::Zero(D_, D_);
    for (int d = 0; d < D_; ++d) p_.Sigma(d, d) = (0.3 + 0.7 * uniform01(r)) * cfg_.init_inflation;
    Eigen::MatrixXd L = p_.Sigma.llt().matrixL();
    for (int i = 0; i < N_; ++i)
      for (int t = 1; t < T_; ++t) {
        Eigen::VectorXd f = mvn_draw(r, L);
        for (int d = 0; d < D_; ++d) p_.phi_cell(i, t)[d] = f(d);
      }
    if (has_latent_states(m_.variant())) {
      for (int d = 0; d < D_; ++d) {
        p_.eta0[d] = pr_.eta0_mean + init_sd(pr_.eta0_sd) * standard_normal(r);
        if (uses_presence_covariates(m_.variant()))
          for (double& e : p_.eta[d]) e = pr_.eta_mean + init_sd(pr_.eta_sd) * standard_normal(r);
        if (uses_persistence(m_.variant())) {
          p_.rho_ar[d] = pr_.rho_mean + init_sd(pr_.rho_sd) * standard_normal(r);
          for (int j = 0; j < D_; ++j)
            if (j != d) p_.rho_di(j, d) = pr_.rho_mean + init_sd(pr_.rho_sd) * standard_normal(r);
        }
      }
    }
  }

  void initial_states() {
    s_ = StateSequence(N_, T_, D_);
    if (!has_latent_states(m_.variant())) return;
    const auto& panel = m_.panel();
    for (int i = 0; i < N_; ++i)
      for (int t = 0; t < T_; ++t) {
        int s = 0;
        for (int d = 0; d < D_; ++d) {
          const bool present = panel.count(d + 1, i, t) > 0 || uniform01(rng_) < 0.5;
          if (!present) s |= 1 << d;
        }
        s_.set(i, t, s);
      }
  }

  // ---- adaptation ----
  void setup_adaptation() {
    auto scalar = [&](double scale) {
      ScalarAdaptation a;
      a.scale = scale;
      a.interval = cfg_.adapt_interval;
      return a;
    };
    zeta_a_.assign(K_, scalar(0.1));
    alpha_a_.assign(p_.alpha.size(), scalar(0.05));
    sigma_a_.assign(D_, scalar(0.2));
    shift_a_.assign(D_, scalar(0.2));
    area_a_.assign(static_cast<std::size_t>(D_) * N_, scalar(0.2));
    phi_a_.assign(static_cast<std::size_t>(N_) * T_, BlockAdaptation(D_, 0.05, 0.234, cfg_.adapt_interval));
    pres_a_.clear();
    if (has_latent_states(m_.variant()))
      for (int d = 0; d < D_; ++d)
        pres_a_.emplace_back(presence_dim(d), 0.05, 0.234, std::max(cfg_.adapt_interval, 100));
  }

  void freeze() {
    auto fz = [](auto& v) {
      for (auto& a : v) {
        a.frozen = true;
        a.reset_counts();
      }
    };
    fz(zeta_a_);
    fz(alpha_a_);
    fz(sigma_a_);
    fz(shift_a_);
    fz(area_a_);
    fz(phi_a_);
    fz(pres_a_);
    burn_scales_.clear();
    for (auto& a : zeta_a_) burn_scales_.push_back(a.scale);
    for (auto& a : alpha_a_) burn_scales_.push_back(a.scale);
    for (auto& a : sigma_a_) burn_scales_.push_back(a.scale);
    for (auto& a : shift_a_) burn_scales_.push_back(a.scale);
    for (auto& a : pres_a_) burn_scales_.push_back(a.scale);
    burn_area_scale_ = mean_scale(area_a_);
    burn_phi_scale_ = mean_scale(phi_a_);
  }

  template <class V>
  static double mean_scale(const V& v) {
    double s = 0.0;
    for (const auto& a : v) s += a.scale;
    return v.empty() ? 0.0 : s / v.size();
  }
  template <class V>
  static double mean_rate(const V& v) {
    long long acc = 0, prop = 0;
    for (const auto& a : v) {
      acc += a.accepted;
      prop += a.proposed;
    }
    return prop ? static_cast<double>(acc) / prop : 0.0;
  }

  AdaptationLedger ledger() const {
    AdaptationLedger L;
    L.sigma_redraws = sigma_redraws_;
    std::size_t b = 0;
    auto burn = [&](double fallback) { return b < burn_scales_.size() ? burn_scales_[b++] : fallback; };
    const auto& dn = m_.panel().disease_names();
    const auto& names = m_.covariates().disease_names();
    for (int k = 0; k < K_; ++k)
      L.entries.push_back({"zeta[" + dn[k] + "]", zeta_a_[k].acceptance_rate(), burn(zeta_a_[k].scale), zeta_a_[k].scale});
    for (std::size_t j = 0; j < alpha_a_.size(); ++j)
      L.entries.push_back({"alpha[" + m_.covariates().free_alpha_names()[j] + "]", alpha_a_[j].acceptance_rate(),
                           burn(alpha_a_[j].scale), alpha_a_[j].scale});
    for (int d = 0; d < D_; ++d)
      L.entries.push_back({"sigma[" + names[d] + "]", sigma_a_[d].acceptance_rate(), burn(sigma_a_[d].scale),
                           sigma_a_[d].scale});
    for (int d = 0; d < D_; ++d)
      L.entries.push_back({"intercept shift[" + names[d] + "]", shift_a_[d].acceptance_rate(),
                           burn(shift_a_[d].scale), shift_a_[d].scale});
    for (int d = 0; d < static_cast<int>(pres_a_.size()); ++d)
      L.entries.push_back({"presence[" + names[d] + "]", pres_a_[d].acceptance_rate(), burn(pres_a_[d].scale),
                           pres_a_[d].scale});
    L.entries.push_back({"alpha0i (mean over areas)", mean_rate(area_a_),
                         burn_scales_.empty() ? mean_scale(area_a_) : burn_area_scale_, mean_scale(area_a_)});
    L.entries.push_back({"phi (mean over cells)", mean_rate(phi_a_),
                         burn_scales_.empty() ? mean_scale(phi_a_) : burn_phi_scale_, mean_scale(phi_a_)});
    return L;
  }

  // ---- Sigma-dependent tables ----
  void set_sigma_tables() {
    sigma_inv_ = p_.Sigma.inverse();
    const int full = (1 << D_) - 1;
    cond_.assign(full + 1, {});
    for (int mask = 1; mask <= full; ++mask) {
      Cond& c = cond_[mask];
      for (int d = 0; d < D_; ++d) ((mask >> d) & 1 ? c.A : c.B).push_back(d);
      const int a = static_cast<int>(c.A.size()), b = static_cast<int>(c.B.size());
      Eigen::MatrixXd Saa(a, a), Sab(a, b), Sbb(b, b);
      for (int r = 0; r < a; ++r) {
        for (int q = 0; q < a; ++q) Saa(r, q) = p_.Sigma(c.A[r], c.A[q]);
        for (int q = 0; q < b; ++q) Sab(r, q) = p_.Sigma(c.A[r], c.B[q]);
      }
      for (int r = 0; r < b; ++r)
        for (int q = 0; q < b; ++q) Sbb(r, q) = p_.Sigma(c.B[r], c.B[q]);
      if (b > 0) {
        c.C = Sab * Sbb.inverse();
        Saa -= c.C * Sab.transpose();
      } else {
        c.C = Eigen::MatrixXd(a, 0);
      }
      Saa = 0.5 * (Saa + Saa.transpose());
      c.L = Saa.llt().matrixL();
    }
  }

  // ---- Step 1 ----
  void step_parameters() {
    refresh_cache();
    for (int k = 0; k < K_; ++k) update_zeta(k);
    for (int j = 0; j < static_cast<int>(p_.alpha.size()); ++j) update_alpha(j);
    for (int i = 0; i < N_; ++i)
      for (int t = 1; t < T_; ++t) update_phi(i, t);
    p_.Sigma = update_sigma(phi_scatter(p_), static_cast<long long>(N_) * (T_ - 1), pr_, rng_, &sigma_redraws_);
    set_sigma_tables();
    for (int d = 0; d < D_; ++d)
      for (int i = 0; i < N_; ++i) update_area_intercept(d, i);
    for (int d = 0; d < D_; ++d) {
      update_sigma_k(d);
      std::span<const double> a(p_.area_intercept.data() + static_cast<std::size_t>(d) * N_, N_);
      p_.alpha0[d] = draw_population_intercept(a, p_.sigma[d], pr_.intercept_mean, pr_.intercept_sd, rng_);
      update_intercept_shift(d);
    }
    if (has_latent_states(m_.variant()))
      for (int d = 0; d < D_; ++d) update_presence(d);
  }

  double emission_sum(const std::vector<double>& em) const {
    double s = 0.0;
    for (int i = 0; i < N_; ++i)
      for (int t = 1; t < T_; ++t) s += em[cell(i, t)];
    return s;
  }

  bool accept(double log_ratio) { return std::isfinite(log_ratio) && metropolis_accept(log_ratio, uniform01(rng_)); }

  double intercept_prior(int d, const double* area, double alpha0) const {
    double s = normal_lp(alpha0, pr_.intercept_mean, pr_.intercept_sd);
    for (int i = 0; i < N_; ++i) s += normal_lp(area[i], alpha0, p_.sigma[d]);
    return s;
  }

  // zeta_k on the logit scale with a compensating shift of the intercepts of
  // the affected diseases, which removes most of their posterior correlation.
  void update_zeta(int k) {
    auto& ad = zeta_a_[k];
    const double l0 = p_.zeta_logit[k];
    const double l1 = l0 + ad.scale * standard_normal(rng_);
    const double dz = logistic(l1) - logistic(l0);
    const double sign = k == 0 ? 1.0 : -1.0;  // intercept shift direction
    std::vector<double> area_new = p_.area_intercept;
    std::vector<double> alpha0_new = p_.alpha0;
    double lp_old = log_logistic(l0) + log_logistic(-l0);
    double lp_new = log_logistic(l1) + log_logistic(-l1);
    for (int d = 0; d < D_; ++d) {
      if (k != 0 && d != k - 1) continue;
      double shift_mean = 0.0;
      for (int i = 0; i < N_; ++i) {
        const double sh = sign * dz * lag_mean_[static_cast<std::size_t>(k) * N_ + i];
        area_new[static_cast<std::size_t>(d) * N_ + i] += sh;
        shift_mean += sh;
      }
      alpha0_new[d] += shift_mean / N_;
      lp_old += intercept_prior(d, p_.area_intercept.data() + static_cast<std::size_t>(d) * N_, p_.alpha0[d]);
      lp_new += intercept_prior(d, area_new.data() + static_cast<std::size_t>(d) * N_, alpha0_new[d]);
    }
    if (lik_) {
      ll_new_ = ll_;
      em_new_ = em_;
      for (int i = 0; i < N_; ++i)
        for (int t = 1; t < T_; ++t) {
          double* l = ll_new_.data() + cell(i, t) * D_;
          const double lag = m_.lag_log(k, i, t) - lag_mean_[static_cast<std::size_t>(k) * N_ + i];
          for (int d = 0; d < D_; ++d) {
            if (k == 0)
              l[d] -= dz * lag;
            else if (d == k - 1)
              l[d] += dz * lag;
          }
          em_new_[cell(i, t)] = cell_emission(i, t, l);
        }
      lp_old += emission_sum(em_);
      lp_new += emission_sum(em_new_);
    }
    const bool ok = accept(lp_new - lp_old);
    ad.record(ok);
    if (!ok) return;
    p_.zeta_logit[k] = l1;
    p_.area_intercept = std::move(area_new);
    p_.alpha0 = std::move(alpha0_new);
    if (lik_) {
      ll_.swap(ll_new_);
      em_.swap(em_new_);
    } else {
      refresh_cache();
    }
  }

  void update_alpha(int j) {
    auto& ad = alpha_a_[j];
    const double delta = ad.scale * standard_normal(rng_);
    const double a0 = p_.alpha[j], a1 = a0 + delta;
    double lr = normal_lp(a1, pr_.alpha_mean, pr_.alpha_sd) - normal_lp(a0, pr_.alpha_mean, pr_.alpha_sd);
    const auto& cov = m_.covariates();
    if (lik_) {
      ll_new_ = ll_;
      em_new_ = em_;
      for (int i = 0; i < N_; ++i)
        for (int t = 1; t < T_; ++t) {
          double* l = ll_new_.data() + cell(i, t) * D_;
          for (int d = 0; d < D_; ++d) {
            const auto& map = cov.alpha_map(d);
            const auto x = cov.x_row(d, i, t);
            for (std::size_t s = 0; s < map.size(); ++s)
              if (map[s] == j) l[d] += delta * x[s];
          }
          em_new_[cell(i, t)] = cell_emission(i, t, l);
        }
      lr += emission_sum(em_new_) - emission_sum(em_);
    }
    const bool ok = accept(lr);
    ad.record(ok);
    if (!ok) return;
    p_.alpha[j] = a1;
    if (lik_) {
      ll_.swap(ll_new_);
      em_.swap(em_new_);
    }
  }

  void update_phi(int i, int t) {
    const int full = (1 << D_) - 1;
    const bool informative = lik_ && m_.panel().total(i, t) > 0;
    const int absent = informative ? s_.at(i, t) : full;
    double* phi = p_.phi_cell(i, t);
    double* ll = ll_at(i, t);
    if (absent != full) {
      double base[8];
      for (int d = 0; d < D_; ++d) base[d] = ll[d] - phi[d];
      auto target = [&](std::span<const double> f) {
        double l[8];
        for (int d = 0; d < D_; ++d) l[d] = base[d] + f[d];
        Eigen::Map<const Eigen::VectorXd> v(f.data(), D_);
        return cell_emission(i, t, l) - 0.5 * v.dot(sigma_inv_ * v);
      };
      Eigen::Map<const Eigen::VectorXd> v(phi, D_);
      double cur = em_[cell(i, t)] - 0.5 * v.dot(sigma_inv_ * v);
      if (blocked_rwm_update({phi, static_cast<std::size_t>(D_)}, cur, target, phi_a_[cell(i, t)], rng_)) {
        for (int d = 0; d < D_; ++d) ll[d] = base[d] + phi[d];
        em_[cell(i, t)] = cell_emission(i, t, ll);
      }
    }
    if (absent != 0) {
      // Components without likelihood information: exact Gaussian conditional draw.
      const Cond& c = cond_[absent];
      Eigen::VectorXd fb(c.B.size());
      for (std::size_t q = 0; q < c.B.size(); ++q) fb(q) = phi[c.B[q]];
      Eigen::VectorXd fa = mvn_draw(rng_, c.L);
      if (!c.B.empty()) fa += c.C * fb;
      for (std::size_t q = 0; q < c.A.size(); ++q) {
        const int d = c.A[q];
        ll[d] += fa(q) - phi[d];
        phi[d] = fa(q);
      }
    }
  }

  void update_area_intercept(int d, int i) {
    auto& ad = area_a_[static_cast<std::size_t>(d) * N_ + i];
    const double a0 = p_.area_int(d, i);
    const double delta = ad.scale * standard_normal(rng_);
    double lr = normal_lp(a0 + delta, p_.alpha0[d], p_.sigma[d]) - normal_lp(a0, p_.alpha0[d], p_.sigma[d]);
    double buf_stack[64];
    std::vector<double> buf_heap;
    double* em_new = buf_stack;
    if (T_ > 64) {
      buf_heap.resize(T_);
      em_new = buf_heap.data();
    }
    if (lik_) {
      for (int t = 1; t < T_; ++t) {
        double l[8];
        const double* cur = ll_at(i, t);
        for (int e = 0; e < D_; ++e) l[e] = cur[e];
        l[d] += delta;
        em_new[t] = cell_emission(i, t, l);
        lr += em_new[t] - em_[cell(i, t)];
      }
    }
    const bool ok = accept(lr);
    ad.record(ok);
    if (!ok) return;
    p_.area_int(d, i) = a0 + delta;
    for (int t = 1; t < T_; ++t) {
      ll_at(i, t)[d] += delta;
      if (lik_) em_[cell(i, t)] = em_new[t];
    }
  }

  // Moves alpha0_k and every alpha0_ki together; the hierarchical term is invariant.
  void update_intercept_shift(int d) {
    auto& ad = shift_a_[d];
    const double delta = ad.scale * standard_normal(rng_);
    double lr = normal_lp(p_.alpha0[d] + delta, pr_.intercept_mean, pr_.intercept_sd) -
                normal_lp(p_.alpha0[d], pr_.intercept_mean, pr_.intercept_sd);
    if (lik_) {
      em_new_ = em_;
      for (int i = 0; i < N_; ++i)
        for (int t = 1; t < T_; ++t) {
          double l[8];
          const double* cur = ll_at(i, t);
          for (int e = 0; e < D_; ++e) l[e] = cur[e];
          l[d] += delta;
          em_new_[cell(i, t)] = cell_emission(i, t, l);
        }
      lr += emission_sum(em_new_) - emission_sum(em_);
    }
    const bool ok = accept(lr);
    ad.record(ok);
    if (!ok) return;
    p_.alpha0[d] += delta;
    for (int i = 0; i < N_; ++i) {
      p_.area_int(d, i) += delta;
      for (int t = 1; t < T_; ++t) ll_at(i, t)[d] += delta;
    }
    if (lik_) em_.swap(em_new_);
  }

  void update_sigma_k(int d) {
    auto& ad = sigma_a_[d];
    const double l0 = std::log(p_.sigma[d]);
    const double l1 = l0 + ad.scale * standard_normal(rng_);
    auto lp = [&](double l) {
      const double s = std::exp(l);
      double v = normal_lp(s, 0.0, pr_.sigma_scale) + l;  // half-normal prior, log-scale Jacobian
      for (int i = 0; i < N_; ++i) v += normal_lp(p_.area_int(d, i), p_.alpha0[d], s) - l;
      return v;
    };
    const bool ok = accept(lp(l1) - lp(l0));
    ad.record(ok);
    if (ok) p_.sigma[d] = std::exp(l1);
  }

  // Presence block of disease d: eta0, eta, rho_ar, rho_di(., d) as the variant allows.
  int presence_dim(int d) const {
    int n = 1;
    if (uses_presence_covariates(m_.variant())) n += m_.covariates().z_count(d);
    if (uses_persistence(m_.variant())) n += D_;
    return n;
  }

  void get_presence(int d, double* v) const {
    int n = 0;
    v[n++] = p_.eta0[d];
    if (uses_presence_covariates(m_.variant()))
      for (double e : p_.eta[d]) v[n++] = e;
    if (uses_persistence(m_.variant())) {
      v[n++] = p_.rho_ar[d];
      for (int j = 0; j < D_; ++j)
        if (j != d) v[n++] = p_.rho_di(j, d);
    }
  }
  void set_presence(int d, const double* v) {
    int n = 0;
    p_.eta0[d] = v[n++];
    if (uses_presence_covariates(m_.variant()))
      for (double& e : p_.eta[d]) e = v[n++];
    if (uses_persistence(m_.variant())) {
      p_.rho_ar[d] = v[n++];
      for (int j = 0; j < D_; ++j)
        if (j != d) p_.rho_di(j, d) = v[n++];
    }
  }

  double presence_logpost(int d, std::span<const double> v) const {
    const bool cov = uses_presence_covariates(m_.variant());
    const bool pers = uses_persistence(m_.variant());
    const int nz = cov ? m_.covariates().z_count(d) : 0;
    double lp = normal_lp(v[0], pr_.eta0_mean, pr_.eta0_sd);
    for (int j = 0; j < nz; ++j) lp += normal_lp(v[1 + j], pr_.eta_mean, pr_.eta_sd);
    if (pers)
      for (int j = 0; j < D_; ++j) lp += normal_lp(v[1 + nz + j], pr_.rho_mean, pr_.rho_sd);
    if (!lik_) return lp;
    // Interaction coefficient for source disease j, in block order.
    double rho_from[8];
    if (pers) {
      int n = 1 + nz + 1;
      for (int j = 0; j < D_; ++j) rho_from[j] = j == d ? v[1 + nz] : v[n++];
    }
    for (int i = 0; i < N_; ++i)
      for (int t = 1; t < T_; ++t) {
        double lin = v[0];
        if (cov) {
          const auto z = m_.covariates().z_row(d, i, t);
          for (int j = 0; j < nz; ++j) lin += z[j] * v[1 + j];
        }
        if (pers) {
          const int prev = s_.at(i, t - 1);
          for (int j = 0; j < D_; ++j)
            if (state_has(prev, j)) lin += rho_from[j];
        }
        lp += log_logistic(state_has(s_.at(i, t), d) ? lin : -lin);
      }
    return lp;
  }

  void update_presence(int d) {
    double v[16];
    const int n = presence_dim(d);
    get_presence(d, v);
    auto target = [&](std::span<const double> x) { return presence_logpost(d, x); };
    double cur = presence_logpost(d, {v, static_cast<std::size_t>(n)});
    auto& ad = pres_a_[d];
    if (blocked_rwm_update({v, static_cast<std::size_t>(n)}, cur, target, ad, rng_)) set_presence(d, v);
  }

  // ---- Step 2 ----
  void step_states() {
    if (!lik_) return;
    if (!cfg_.update_parameters) refresh_cache();
    if (!has_latent_states(m_.variant())) {
      cell_ll_ = em_;
      return;
    }
    const FilterResult f = forward_filter(m_, p_);
    s_ = backward_sample(f, D_, rng_);
    cell_ll_ = f.cell_loglik;
  }

  struct Cond {
    std::vector<int> A, B;
    Eigen::MatrixXd C, L;
  };

  const Model& m_;
  const PriorSpec& pr_;
  const GibbsConfig& cfg_;
  const ParameterLayout& layout_;
  Rng rng_;
  int K_, D_, N_, T_;
  bool lik_;
  ParameterState p_;
  StateSequence s_;
  std::vector<double> ll_, ll_new_, em_, em_new_, cell_ll_, lag_mean_;
  Eigen::MatrixXd sigma_inv_;
  std::vector<Cond> cond_;
  std::vector<ScalarAdaptation> zeta_a_, alpha_a_, sigma_a_, area_a_, shift_a_;
  std::vector<BlockAdaptation> phi_a_, pres_a_;
  std::vector<double> burn_scales_;
  double burn_area_scale_ = 0.0, burn_phi_scale_ = 0.0;
  int sigma_redraws_ = 0;
};

}  // namespace

PosteriorDraws run_gibbs(const Model& model, const PriorSpec& prior, const GibbsConfig& config,
                         const ParameterState* start) {
  config.validate();
  const PriorSpec pr = prior.resolved(model.D());
  if (start) start->validate(model.covariates());
  PosteriorDraws out;
  out.layout = ParameterLayout::make(model);
  out.variant = model.variant();
  out.N = model.N();
  out.T = model.T();
  out.D = model.D();
  out.initial_presence = pr.initial_presence;
  out.chains.resize(config.chains);

  const int threads = config.threads == 0 ? config.chains : std::min(config.threads, config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  auto work = [&](int c) {
    try {
      Chain chain(model, pr, config, out.layout, c, start);
      out.chains[c] = chain.run();
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  for (int first = 0; first < config.chains; first += threads) {
    const int last = std::min(config.chains, first + threads);
    if (last - first == 1) {
      work(first);
      continue;
    }
    std::vector<std::thread> pool;
    for (int c = first; c < last; ++c) pool.emplace_back(work, c);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::vector<ConvergenceRow> convergence_table(const PosteriorDraws& draws) {
  std::vector<ConvergenceRow> rows;
  for (int j = 0; j < draws.layout.size(); ++j) {
    ConvergenceRow r;
    r.name = draws.layout.names[j];
    const auto s = draws.series(j);
    if (s.size() >= 2 && draws.draws_per_chain() >= 4) r.rhat = gelman_rubin(s);
    r.ess = effective_sample_size(s);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace msz
