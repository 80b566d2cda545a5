#include "msziarmn/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msziarmn/errors.hpp"
#include "msziarmn/ffbs.hpp"
#include "msziarmn/math.hpp"

namespace msz {

// ---------------------------------------------------------------------------
// WAIC
// ---------------------------------------------------------------------------

WaicReport waic_from_logliks(const std::vector<double>& ll, std::size_t M, int N, int T) {
  const std::size_t C = static_cast<std::size_t>(N) * T;
  if (M == 0) throw ValidationError("WAIC needs at least one retained draw");
  if (ll.size() != M * C) throw ValidationError("log-likelihood matrix has the wrong shape");
  WaicReport r;
  r.N = N;
  r.T = T;
  r.draws = M;
  r.cell_lpd.assign(C, 0.0);
  r.cell_pwaic.assign(C, 0.0);
  std::vector<double> col(M);
  for (int i = 0; i < N; ++i)
    for (int t = 1; t < T; ++t) {
      const std::size_t c = static_cast<std::size_t>(i) * T + t;
      for (std::size_t m = 0; m < M; ++m) col[m] = ll[m * C + c];
      const double lpd = log_sum_exp(col) - std::log(static_cast<double>(M));
      if (!std::isfinite(lpd))
        throw NumericalError("mean likelihood is zero at area " + std::to_string(i + 1) + ", time " +
                             std::to_string(t + 1));
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= M;
      double var = 0.0;
      if (M > 1) {
        for (double v : col) var += (v - mean) * (v - mean);
        var /= M - 1.0;
      }
      r.cell_lpd[c] = lpd;
      r.cell_pwaic[c] = var;
      r.lpdd += lpd;
      r.pwaic += var;
    }
  r.waic = -2.0 * (r.lpdd - r.pwaic);
  return r;
}

namespace {
std::vector<double> stacked_logliks(const PosteriorDraws& d) {
  std::vector<double> out;
  for (const auto& c : d.chains) out.insert(out.end(), c.cell_loglik.begin(), c.cell_loglik.end());
  return out;
}
}  // namespace

WaicReport waic(const PosteriorDraws& d) {
  if (!d.has_cell_loglik()) throw ValidationError("draws carry no per-cell log-likelihoods");
  return waic_from_logliks(stacked_logliks(d), d.total_draws(), d.N, d.T);
}

std::vector<double> recompute_cell_logliks(const PosteriorDraws& d, const Model& model) {
  if (!d.has_phi()) throw ValidationError("recomputing likelihoods needs stored phi draws");
  std::vector<double> out;
  out.reserve(d.total_draws() * d.N * d.T);
  for (std::size_t c = 0; c < d.chains.size(); ++c)
    for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
      const auto p = d.state(model.covariates(), c, m);
      const auto f = forward_filter(model, p);
      out.insert(out.end(), f.cell_loglik.begin(), f.cell_loglik.end());
    }
  return out;
}

WaicReport waic(const PosteriorDraws& d, const Model& model) {
  return waic_from_logliks(recompute_cell_logliks(d, model), d.total_draws(), d.N, d.T);
}

// ---------------------------------------------------------------------------
// Fitted values and presence
// ---------------------------------------------------------------------------

std::vector<std::vector<std::int64_t>> fitted_values(const PosteriorDraws& d, const Model& model, int i, int t,
                                                     Rng& rng) {
  if (t < 1 || t >= model.T() || i < 0 || i >= model.N()) throw ValidationError("fitted values need 2 <= t <= T");
  const bool latent = has_latent_states(model.variant());
  if (latent && !d.has_states()) throw ValidationError("fitted values need stored state draws");
  const int D = model.D();
  const auto& cov = model.covariates();
  std::vector<std::vector<std::int64_t>> out;
  std::vector<double> ls(D), pi(D + 1);
  for (std::size_t c = 0; c < d.chains.size(); ++c)
    for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
      auto p = d.state(cov, c, m);
      const int s = latent ? d.chains[c].states[m * d.N * d.T + static_cast<std::size_t>(i) * d.T + t] : 0;
      const Eigen::MatrixXd L = p.Sigma.llt().matrixL();
      const Eigen::VectorXd phi = mvn_draw(rng, L);
      for (int e = 0; e < D; ++e) p.phi_cell(i, t)[e] = phi(e);
      model.log_lambda_star(p, i, t, ls);
      log_mixture_probs(s, ls, pi);
      for (auto& v : pi) v = std::exp(v);
      out.push_back(multinomial_draw(rng, model.panel().total(i, t), pi));
    }
  return out;
}

double presence_probability(const PosteriorDraws& d, int disease, int i, int t) {
  if (!has_latent_states(d.variant)) return 1.0;
  if (!d.has_states()) throw ValidationError("presence probabilities need stored state draws");
  std::size_t hits = 0, n = 0;
  const std::size_t off = static_cast<std::size_t>(i) * d.T + t;
  for (const auto& c : d.chains)
    for (std::size_t m = 0; m < c.draws; ++m, ++n) hits += state_has(c.states[m * d.N * d.T + off], disease);
  return static_cast<double>(hits) / n;
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

Summary summarize_values(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("cannot summarise an empty set of draws");
  Summary s;
  // Centred on the first draw so constant draws give their value exactly.
  double dev = 0.0;
  for (double x : v) dev += x - v.front();
  s.mean = v.front() + dev / v.size();
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double h = (sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
  };
  s.lower = q(0.025);
  s.upper = q(0.975);
  return s;
}

std::vector<SummaryRow> summarize(const PosteriorDraws& d, const std::map<std::string, Transform>& transforms) {
  if (d.total_draws() == 0) throw ValidationError("cannot summarise an empty set of draws");
  std::vector<SummaryRow> rows;
  for (int j = 0; j < d.layout.size(); ++j) {
    const auto& name = d.layout.names[j];
    Transform tr = Transform::Identity;
    std::size_t best = 0;
    for (const auto& [prefix, t] : transforms)
      if (name.rfind(prefix, 0) == 0 && prefix.size() >= best) {
        tr = t;
        best = prefix.size();
      }
    std::vector<double> v;
    for (const auto& s : d.series(j)) v.insert(v.end(), s.begin(), s.end());
    for (double& x : v) {
      if (tr == Transform::Exp) x = std::exp(x);
      if (tr == Transform::Logistic) x = logistic(x);
    }
    rows.push_back({name, tr == Transform::Exp ? "exp" : tr == Transform::Logistic ? "logistic" : "identity",
                    summarize_values(v)});
  }
  return rows;
}

LambdaBar lambda_bar(const PosteriorDraws& d, const Model& model, int disease, int i) {
  if (!d.has_phi()) throw ValidationError("lambda-bar needs stored phi draws");
  const bool latent = has_latent_states(d.variant);
  if (latent && !d.has_states()) throw ValidationError("lambda-bar needs stored state draws");
  LambdaBar out;
  std::vector<double> vals;
  for (std::size_t c = 0; c < d.chains.size(); ++c)
    for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
      const auto p = d.state(model.covariates(), c, m);
      double num = 0.0, den = 0.0;
      for (int t = 1; t < d.T; ++t) {
        const bool present =
            !latent || state_has(d.chains[c].states[m * d.N * d.T + static_cast<std::size_t>(i) * d.T + t], disease);
        if (!present) continue;
        num += std::exp(model.linear_predictor(p, disease, i, t));
        den += 1.0;
      }
      if (den == 0.0) {
        ++out.excluded;
        continue;
      }
      vals.push_back(num / den);
    }
  out.used = vals.size();
  if (!vals.empty()) out.summary = summarize_values(vals);
  return out;
}

ResponseCurve response_curve(const PosteriorDraws& d, const Model& model, int disease, int slot,
                             const std::vector<double>& grid, double threshold) {
  const auto& cov = model.covariates();
  if (disease < 0 || disease >= model.D() || slot < 0 || slot >= cov.x_count(disease))
    throw ValidationError("response curve refers to a non-existent covariate slot");
  if (d.total_draws() == 0) throw ValidationError("cannot summarise an empty set of draws");
  ResponseCurve rc;
  rc.disease = cov.disease_names()[disease];
  rc.covariate = cov.x_names(disease)[slot];
  rc.grid = grid;
  double centre = 0.0, scale = 1.0;
  for (const auto& r : cov.standardization())
    if (r.name == rc.covariate) {
      centre = r.mean;
      scale = r.sd;
    }
  const int a0 = d.layout.index("alpha0[" + rc.disease + "]");
  const int ac = d.layout.index("alpha[" + cov.free_alpha_names()[cov.alpha_map(disease)[slot]] + "]");
  for (double g : grid) {
    const double gs = (g - centre) / scale;
    std::vector<double> v;
    for (std::size_t c = 0; c < d.chains.size(); ++c)
      for (std::size_t m = 0; m < d.chains[c].draws; ++m) {
        const auto row = d.param_row(c, m);
        v.push_back(std::exp(row[a0] + gs * row[ac]));
      }
    rc.lambda.push_back(summarize_values(v));
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double f0 = rc.lambda[g - 1].mean - threshold, f1 = rc.lambda[g].mean - threshold;
    if (f0 == 0.0) rc.crossings.push_back(grid[g - 1]);
    else if ((f0 < 0.0) != (f1 < 0.0)) rc.crossings.push_back(grid[g - 1] + (grid[g] - grid[g - 1]) * (-f0) / (f1 - f0));
  }
  return rc;
}

}  // namespace msz
