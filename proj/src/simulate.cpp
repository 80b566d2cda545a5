#include "msziarmn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "msziarmn/errors.hpp"
#include "msziarmn/math.hpp"

namespace msz {

// ---------------------------------------------------------------------------
// simulate_panel
// ---------------------------------------------------------------------------

void SimulationDesign::validate() const {
  const int K = static_cast<int>(disease_names.size());
  if (K < 2) throw ValidationError("design needs at least 2 diseases");
  if (N < 1 || T < 2) throw ValidationError("design needs N >= 1 and T >= 2");
  if (covariates.non_baseline() != K - 1 || covariates.areas() != N || covariates.times() != T)
    throw ValidationError("design covariates do not match (K, N, T)");
  if (!totals.empty()) {
    if (totals.size() != static_cast<std::size_t>(N) * T) throw ValidationError("totals matrix must be N x T");
    for (auto v : totals)
      if (v < 0) throw ValidationError("totals must be non-negative");
  } else if (!(total_mean > 0.0) || !(total_size > 0.0)) {
    throw ValidationError("negative-binomial totals need positive mean and size");
  }
}

SimulatedPanel simulate_panel(const SimulationDesign& design, const ParameterState& params, ModelVariant variant,
                              Rng& rng) {
  design.validate();
  const auto& cov = design.covariates;
  params.validate(cov);
  const int K = static_cast<int>(design.disease_names.size()), D = K - 1, N = design.N, T = design.T;
  const bool latent = has_latent_states(variant);

  std::vector<std::int64_t> totals = design.totals;
  if (totals.empty()) {
    totals.resize(static_cast<std::size_t>(N) * T);
    for (auto& v : totals)
      v = poisson_draw(rng, gamma_draw(rng, design.total_size, design.total_mean / design.total_size));
  }

  ParameterState truth = params;
  std::fill(truth.phi.begin(), truth.phi.end(), 0.0);
  StateSequence states(N, T, D);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(K) * N * T, 0);
  auto y = [&](int k, int i, int t) -> std::int64_t& { return counts[(static_cast<std::size_t>(k) * N + i) * T + t]; };

  Eigen::LLT<Eigen::MatrixXd> llt(params.Sigma);
  const Eigen::MatrixXd L = llt.matrixL();
  std::vector<std::vector<double>> alpha(D);
  for (int d = 0; d < D; ++d) alpha[d] = cov.expand_alpha(d, params.alpha);

  std::vector<double> ls(D), pi(K);
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) {
      int s = 0;
      if (latent) {
        for (int d = 0; d < D; ++d) {
          const double p = t == 0 ? params.initial_presence[d]
                                  : logistic(presence_logit(params, cov.z_row(d, i, t), variant, d, states.at(i, t - 1)));
          if (!(uniform01(rng) < p)) s |= 1 << d;
        }
      }
      states.set(i, t, s);

      const Eigen::VectorXd phi = mvn_draw(rng, L);
      if (t > 0)
        for (int d = 0; d < D; ++d) truth.phi_cell(i, t)[d] = phi(d);
      const double base = t == 0 ? 0.0 : params.zeta(0) * std::log1p(static_cast<double>(y(0, i, t - 1)));
      for (int d = 0; d < D; ++d) {
        double v = params.area_int(d, i) + phi(d);
        const auto x = cov.x_row(d, i, t);
        for (std::size_t j = 0; j < x.size(); ++j) v += x[j] * alpha[d][j];
        if (t > 0) v += params.zeta(d + 1) * std::log1p(static_cast<double>(y(d + 1, i, t - 1))) - base;
        ls[d] = v;
      }
      log_mixture_probs(s, ls, pi);
      for (auto& v : pi) v = std::exp(v);
      const auto draw = multinomial_draw(rng, totals[static_cast<std::size_t>(i) * T + t], pi);
      for (int k = 0; k < K; ++k) y(k, i, t) = draw[k];
    }
  }

  std::vector<std::string> areas;
  for (int i = 0; i < N; ++i) areas.push_back("area" + std::to_string(i + 1));
  std::vector<long long> times;
  for (int t = 0; t < T; ++t) times.push_back(t + 1);
  return {DiseasePanel(design.disease_names, areas, times, counts), states, truth};
}

// ---------------------------------------------------------------------------
// Reed-Frost
// ---------------------------------------------------------------------------

void ReedFrostParams::validate() const {
  if (K < 2 || N < 1 || T < 2) throw ValidationError("Reed-Frost needs K >= 2, N >= 1, T >= 2");
  if (beta0.size() != static_cast<std::size_t>(K) * N) throw ValidationError("beta0 must have K*N entries");
  if (!xbeta.empty() && xbeta.size() != static_cast<std::size_t>(K) * N * T)
    throw ValidationError("xbeta must have K*N*T entries");
  if (sigma_rf.rows() != K || sigma_rf.cols() != K) throw ValidationError("sigma_rf must be K x K");
  if (!(shared_sd >= 0.0)) throw ValidationError("shared_sd must be non-negative");
  if (zeta.size() != static_cast<std::size_t>(K)) throw ValidationError("need K mixing exponents");
  if (population.size() != static_cast<std::size_t>(N)) throw ValidationError("need N populations");
  for (double p : population)
    if (!(p > 0.0)) throw ValidationError("populations must be positive");
  if (!susceptible.empty()) {
    if (susceptible.size() != static_cast<std::size_t>(K) * N) throw ValidationError("susceptibles must be K*N");
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < N; ++i) {
        const double d = susceptible[static_cast<std::size_t>(k) * N + i];
        if (!(d >= 0.0 && d <= population[i])) throw ValidationError("susceptibles must lie in [0, pop]");
      }
  }
  if (!beta_ne.empty()) {
    if (beta_ne.size() != static_cast<std::size_t>(K)) throw ValidationError("need K spread exponents");
    if (neighbors.areas() != N) throw ValidationError("spatial spread needs area metadata for every area");
  }
  if (!(mean_cap > 0.0)) throw ValidationError("mean_cap must be positive");
}

std::vector<double> reed_frost_means(const ReedFrostParams& P, std::span<const std::int64_t> counts, int i, int t,
                                     std::span<const double> psi, double b, std::span<const double> susceptible) {
  std::vector<double> mu(P.K);
  auto y = [&](int k, int a, int s) { return counts[(static_cast<std::size_t>(k) * P.N + a) * P.T + s]; };
  for (int k = 0; k < P.K; ++k) {
    double logr = P.beta0[static_cast<std::size_t>(k) * P.N + i] + psi[k] + b;
    if (!P.xbeta.empty()) logr += P.xbeta[(static_cast<std::size_t>(k) * P.N + i) * P.T + t];
    double m = susceptible[static_cast<std::size_t>(k) * P.N + i] / P.population[i] * std::exp(logr) *
               std::pow(static_cast<double>(y(k, i, t - 1)) + 1.0, P.zeta[k]);
    if (!P.beta_ne.empty() && P.beta_ne[k] != 0.0) {
      double spread = 0.0;
      for (int j : P.neighbors.neighbors[i]) spread += static_cast<double>(y(k, j, t - 1));
      spread *= P.neighbors.neighbor_weight(i);
      m *= std::pow(spread + 1.0, P.beta_ne[k]);
    }
    mu[k] = m;
  }
  return mu;
}

ReedFrostResult simulate_reed_frost(const ReedFrostParams& P, const std::vector<std::int64_t>& initial, Rng& rng) {
  P.validate();
  if (initial.size() != static_cast<std::size_t>(P.K) * P.N) throw ValidationError("initial counts must be K*N");
  ReedFrostResult r;
  r.K = P.K;
  r.N = P.N;
  r.T = P.T;
  r.counts.assign(static_cast<std::size_t>(P.K) * P.N * P.T, 0);
  r.means.assign(r.counts.size(), 0.0);
  std::vector<double> sus = P.susceptible;
  if (sus.empty())
    for (int k = 0; k < P.K; ++k) sus.insert(sus.end(), P.population.begin(), P.population.end());
  for (int k = 0; k < P.K; ++k)
    for (int i = 0; i < P.N; ++i) {
      if (initial[static_cast<std::size_t>(k) * P.N + i] < 0) throw ValidationError("initial counts must be >= 0");
      r.counts[(static_cast<std::size_t>(k) * P.N + i) * P.T] = initial[static_cast<std::size_t>(k) * P.N + i];
    }
  if (P.deplete)
    for (int k = 0; k < P.K; ++k)
      for (int i = 0; i < P.N; ++i) {
        auto& s = sus[static_cast<std::size_t>(k) * P.N + i];
        s = std::max(0.0, s - static_cast<double>(r.counts[(static_cast<std::size_t>(k) * P.N + i) * P.T]));
      }

  std::vector<double> psi(P.K);
  for (int t = 1; t < P.T; ++t) {
    std::vector<double> next_sus = sus;
    for (int i = 0; i < P.N; ++i) {
      const Eigen::VectorXd e = mvn_draw_psd(rng, P.sigma_rf);
      for (int k = 0; k < P.K; ++k) psi[k] = e(k);
      const double b = P.shared_sd > 0.0 ? P.shared_sd * standard_normal(rng) : 0.0;
      auto mu = reed_frost_means(P, r.counts, i, t, psi, b, sus);
      for (int k = 0; k < P.K; ++k) {
        const std::size_t c = (static_cast<std::size_t>(k) * P.N + i) * P.T + t;
        double m = mu[k];
        if (!(m <= P.mean_cap)) {
          m = P.mean_cap;
          r.capped.push_back({k, i, t});
        }
        r.means[c] = m;
        r.counts[c] = m > 0.0 ? poisson_draw(rng, m) : 0;
        if (P.deplete) {
          auto& s = next_sus[static_cast<std::size_t>(k) * P.N + i];
          s = std::max(0.0, s - static_cast<double>(r.counts[c]));
        }
      }
    }
    sus = std::move(next_sus);
  }
  return r;
}

DiseasePanel ReedFrostResult::to_panel(const std::vector<std::string>& names) const {
  std::vector<std::string> areas;
  for (int i = 0; i < N; ++i) areas.push_back("area" + std::to_string(i + 1));
  std::vector<long long> times;
  for (int t = 0; t < T; ++t) times.push_back(t + 1);
  return DiseasePanel(names, areas, times, counts);
}

// ---------------------------------------------------------------------------
// Conditioning identity and parameter mapping
// ---------------------------------------------------------------------------

namespace {

// Every composition of `total` into K non-negative parts, in lexicographic order.
void compositions(int K, std::int64_t total, std::vector<std::int64_t>& cur, std::vector<std::vector<std::int64_t>>& out) {
  if (static_cast<int>(cur.size()) == K - 1) {
    std::int64_t used = std::accumulate(cur.begin(), cur.end(), std::int64_t{0});
    cur.push_back(total - used);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  const std::int64_t used = std::accumulate(cur.begin(), cur.end(), std::int64_t{0});
  for (std::int64_t v = 0; v <= total - used; ++v) {
    cur.push_back(v);
    compositions(K, total, cur, out);
    cur.pop_back();
  }
}

double multinomial_logpmf(const std::vector<std::int64_t>& y, const std::vector<double>& pi) {
  double lp = 0.0;
  std::int64_t n = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    n += y[k];
    lp -= std::lgamma(static_cast<double>(y[k]) + 1.0);
    if (y[k] > 0) lp += static_cast<double>(y[k]) * std::log(pi[k]);
  }
  return lp + std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace

ConditioningReport check_conditioning_identity(std::span<const double> phi, std::int64_t total, std::size_t draws,
                                               Rng& rng) {
  const int K = static_cast<int>(phi.size());
  if (K < 2) throw ValidationError("conditioning check needs at least 2 diseases");
  if (total < 0) throw ValidationError("total must be non-negative");
  double sum = 0.0;
  for (double p : phi) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("Poisson means must be positive and finite");
    sum += p;
  }
  ConditioningReport rep;
  rep.total = total;
  for (double p : phi) rep.pi.push_back(p / sum);

  std::map<std::vector<std::int64_t>, std::size_t> freq;
  std::vector<std::int64_t> y(K);
  const std::size_t pilot = 100000;
  while (rep.accepted < draws) {
    std::int64_t s = 0;
    for (int k = 0; k < K; ++k) s += (y[k] = poisson_draw(rng, phi[k]));
    ++rep.proposed;
    if (s == total) {
      ++freq[y];
      ++rep.accepted;
    }
    if (rep.proposed == pilot && static_cast<double>(rep.accepted) / pilot < 1e-4)
      throw NumericalError("conditioning on total " + std::to_string(total) +
                           " is too rare (acceptance below 1e-4); choose a total closer to the sum of the means");
  }
  std::vector<std::vector<std::int64_t>> support;
  std::vector<std::int64_t> cur;
  compositions(K, total, cur, support);
  double tv = 0.0;
  for (const auto& c : support) {
    const auto it = freq.find(c);
    const double emp = it == freq.end() ? 0.0 : static_cast<double>(it->second) / rep.accepted;
    tv += std::abs(emp - std::exp(multinomial_logpmf(c, rep.pi)));
  }
  rep.tv_distance = 0.5 * tv;
  return rep;
}

Eigen::MatrixXd mapped_sigma(const Eigen::MatrixXd& S) {
  const int K = static_cast<int>(S.rows());
  Eigen::MatrixXd out(K - 1, K - 1);
  for (int k = 1; k < K; ++k)
    for (int j = 1; j < K; ++j) out(k - 1, j - 1) = S(k, j) - S(k, 0) - S(j, 0) + S(0, 0);
  return out;
}

MappingReport check_parameter_mapping(int K, int configurations, Rng& rng) {
  if (K < 2) throw ValidationError("mapping check needs at least 2 diseases");
  MappingReport rep;
  rep.configurations = configurations;
  const int D = K - 1;
  for (int c = 0; c < configurations; ++c) {
    // Random Reed-Frost ingredients for one cell.
    std::vector<double> beta0(K), xb(K), psi(K), zeta(K), bne(K), delta(K);
    std::vector<std::int64_t> yprev(K), ne_counts(K);
    const double pop = 1000.0 + 99000.0 * uniform01(rng);
    const double b = standard_normal(rng);
    const double w = 1.0 / (5000.0 + 50000.0 * uniform01(rng));
    for (int k = 0; k < K; ++k) {
      beta0[k] = standard_normal(rng);
      xb[k] = 0.5 * standard_normal(rng);
      psi[k] = 0.5 * standard_normal(rng);
      zeta[k] = uniform01(rng);
      bne[k] = uniform01(rng);
      delta[k] = pop * (0.05 + 0.95 * uniform01(rng));
      yprev[k] = poisson_draw(rng, 20.0);
      ne_counts[k] = poisson_draw(rng, 200.0);
    }
    std::vector<double> phi(K);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      const double R = std::exp(beta0[k] + xb[k] + psi[k] + b);
      phi[k] = delta[k] / pop * R * std::pow(yprev[k] + 1.0, zeta[k]) * std::pow(w * ne_counts[k] + 1.0, bne[k]);
      sum += phi[k];
    }
    // Mapped multinomial parameters: differences against the baseline.
    std::vector<double> lstar(D);
    for (int d = 0; d < D; ++d) {
      const int k = d + 1;
      const double a0 = beta0[k] - beta0[0] + std::log(delta[k] / delta[0]);
      const double xa = xb[k] - xb[0] + bne[k] * std::log1p(w * ne_counts[k]) - bne[0] * std::log1p(w * ne_counts[0]);
      const double lam = std::exp(log_lambda(a0, std::vector<double>{xa}, std::vector<double>{1.0}, psi[k] - psi[0]));
      lstar[d] = relative_odds(lam, yprev[k], yprev[0], zeta[k], zeta[0]);
    }
    const auto pi = mixture_probs(1, lstar);
    for (int k = 0; k < K; ++k) rep.max_pi_error = std::max(rep.max_pi_error, std::abs(pi[k] - phi[k] / sum));

    Eigen::MatrixXd G(K, K);
    for (int r = 0; r < K; ++r)
      for (int q = 0; q < K; ++q) G(r, q) = standard_normal(rng);
    const Eigen::MatrixXd S = G * G.transpose();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, K);
    for (int d = 0; d < D; ++d) {
      A(d, 0) = -1.0;
      A(d, d + 1) = 1.0;
    }
    const Eigen::MatrixXd viaA = A * S * A.transpose();
    rep.max_sigma_error = std::max(rep.max_sigma_error, (viaA - mapped_sigma(S)).cwiseAbs().maxCoeff());
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Correlation study
// ---------------------------------------------------------------------------

double baseline_correlation(double a2, double a3) {
  const double l2 = std::exp(a2), l3 = std::exp(a3);
  const double p2 = l2 / (1 + l2 + l3), p3 = l3 / (1 + l2 + l3);
  return -std::sqrt(p2 * p3 / ((1 - p2) * (1 - p3)));
}

CorrelationStudy correlation_study(double a2, double a3, double s2, double s3, std::int64_t total,
                                   const std::vector<double>& grid, std::size_t draws, Rng& rng) {
  if (total < 1) throw ValidationError("correlation study needs total >= 1");
  if (!(s2 >= 0.0) || !(s3 >= 0.0)) throw ValidationError("random-effect sds must be non-negative");
  if (draws < 200) throw ValidationError("correlation study needs at least 200 draws per grid point");
  CorrelationStudy out;
  out.baseline = baseline_correlation(a2, a3);
  const std::size_t batches = 100, per = draws / batches;
  for (double rho : grid) {
    if (!(rho > -1.0 && rho < 1.0)) throw ValidationError("rho must lie in (-1, 1)");
    const double c = std::sqrt(1.0 - rho * rho);
    double n = 0, m2 = 0, m3 = 0, c22 = 0, c33 = 0, c23 = 0;  // running (Welford) moments
    std::vector<double> batch_corr;
    double bn = 0, bm2 = 0, bm3 = 0, b22 = 0, b33 = 0, b23 = 0;
    for (std::size_t m = 0; m < batches * per; ++m) {
      const double z1 = standard_normal(rng), z2 = standard_normal(rng);
      const double l2 = std::exp(a2 + s2 * z1), l3 = std::exp(a3 + s3 * (rho * z1 + c * z2));
      const double den = 1.0 + l2 + l3;
      const double p2 = l2 / den;
      const std::int64_t y2 = binomial_draw(rng, total, p2);
      const std::int64_t y3 = binomial_draw(rng, total - y2, std::min(1.0, l3 / (1.0 + l3)));
      const double v2 = static_cast<double>(y2), v3 = static_cast<double>(y3);
      auto push = [&](double& nn, double& mm2, double& mm3, double& cc22, double& cc33, double& cc23) {
        nn += 1;
        const double d2 = v2 - mm2, d3 = v3 - mm3;
        mm2 += d2 / nn;
        mm3 += d3 / nn;
        cc22 += d2 * (v2 - mm2);
        cc33 += d3 * (v3 - mm3);
        cc23 += d2 * (v3 - mm3);
      };
      push(n, m2, m3, c22, c33, c23);
      push(bn, bm2, bm3, b22, b33, b23);
      if (static_cast<std::size_t>(bn) == per) {
        batch_corr.push_back(b23 / std::sqrt(b22 * b33));
        bn = bm2 = bm3 = b22 = b33 = b23 = 0;
      }
    }
    CorrelationPoint p;
    p.rho = rho;
    p.corr = c23 / std::sqrt(c22 * c33);
    double bm = 0, bv = 0;
    for (double v : batch_corr) bm += v;
    bm /= batch_corr.size();
    for (double v : batch_corr) bv += (v - bm) * (v - bm);
    bv /= batch_corr.size() - 1.0;
    p.mc_se = std::sqrt(bv / batch_corr.size());
    out.curve.push_back(p);
  }
  for (std::size_t g = 1; g < out.curve.size() && !out.crossing; ++g) {
    const double f0 = out.curve[g - 1].corr - out.baseline, f1 = out.curve[g].corr - out.baseline;
    if (f0 == 0.0) out.crossing = out.curve[g - 1].rho;
    else if ((f0 < 0.0) != (f1 < 0.0))
      out.crossing = out.curve[g - 1].rho + (out.curve[g].rho - out.curve[g - 1].rho) * (-f0) / (f1 - f0);
  }
  return out;
}

}  // namespace msz
