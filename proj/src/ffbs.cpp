#include "msziarmn/ffbs.hpp"

#include <cmath>

#include "msziarmn/errors.hpp"
#include "msziarmn/math.hpp"

namespace msz {

double forward_filter_area(const Model& model, const ParameterState& params, int i, FilterResult& out) {
  const int T = model.T(), S = model.states();
  double emis[128];
  double logp[128];

  const Eigen::VectorXd init = model.initial_distribution(params, i);
  for (int s = 0; s < S; ++s) {
    out.predictive[out.cell(i, 0) * S + s] = init(s);
    out.filtered[out.cell(i, 0) * S + s] = init(s);
  }
  out.cell_loglik[out.cell(i, 0)] = 0.0;

  double area_ll = 0.0;
  for (int t = 1; t < T; ++t) {
    const Eigen::MatrixXd G = model.transition_matrix(params, i, t);
    double* trans = &out.transitions[out.cell(i, t) * S * S];
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) trans[a * S + b] = G(a, b);

    const double* prev = &out.filtered[out.cell(i, t - 1) * S];
    double* pred = &out.predictive[out.cell(i, t) * S];
    for (int b = 0; b < S; ++b) {
      double v = 0.0;
      for (int a = 0; a < S; ++a) v += prev[a] * trans[a * S + b];
      pred[b] = v;
    }

    model.emission_logliks(params, i, t, {emis, static_cast<std::size_t>(S)});
    double m = kLogZero;
    for (int s = 0; s < S; ++s) {
      logp[s] = pred[s] > 0.0 ? emis[s] + std::log(pred[s]) : kLogZero;
      if (logp[s] > m) m = logp[s];
    }
    if (m == kLogZero || !std::isfinite(m))
      throw NumericalError("no presence state can explain the counts at area " + std::to_string(i + 1) + ", time " +
                           std::to_string(t + 1));
    double z = 0.0;
    double* filt = &out.filtered[out.cell(i, t) * S];
    for (int s = 0; s < S; ++s) {
      filt[s] = logp[s] == kLogZero ? 0.0 : std::exp(logp[s] - m);
      z += filt[s];
    }
    for (int s = 0; s < S; ++s) filt[s] /= z;
    const double cell_ll = m + std::log(z);
    out.cell_loglik[out.cell(i, t)] = cell_ll;
    area_ll += cell_ll;
  }
  return area_ll;
}

FilterResult forward_filter(const Model& model, const ParameterState& params) {
  FilterResult out;
  out.N = model.N();
  out.T = model.T();
  out.S = model.states();
  const std::size_t cells = static_cast<std::size_t>(out.N) * out.T;
  out.predictive.assign(cells * out.S, 0.0);
  out.filtered.assign(cells * out.S, 0.0);
  out.cell_loglik.assign(cells, 0.0);
  out.transitions.assign(cells * out.S * out.S, 0.0);
  out.loglik = 0.0;
  for (int i = 0; i < out.N; ++i) out.loglik += forward_filter_area(model, params, i, out);
  return out;
}

std::vector<double> smoothed_marginals(const FilterResult& f) {
  const int S = f.S;
  std::vector<double> out(f.filtered.size(), 0.0);
  for (int i = 0; i < f.N; ++i) {
    for (int s = 0; s < S; ++s) out[f.cell(i, f.T - 1) * S + s] = f.filtered[f.cell(i, f.T - 1) * S + s];
    for (int t = f.T - 2; t >= 0; --t) {
      const double* next = &out[f.cell(i, t + 1) * S];
      const double* pred = &f.predictive[f.cell(i, t + 1) * S];
      const double* filt = &f.filtered[f.cell(i, t) * S];
      double* cur = &out[f.cell(i, t) * S];
      double z = 0.0;
      for (int a = 0; a < S; ++a) {
        double acc = 0.0;
        for (int b = 0; b < S; ++b)
          if (pred[b] > 0.0) acc += f.transition(i, t + 1, a, b) * next[b] / pred[b];
        cur[a] = filt[a] * acc;
        z += cur[a];
      }
      for (int a = 0; a < S; ++a) cur[a] /= z;
    }
  }
  return out;
}

void backward_sample_area(const FilterResult& f, int i, Rng& rng, StateSequence& out) {
  const int S = f.S;
  double w[128];
  int next = categorical(rng, f.filtered_at(i, f.T - 1));
  out.set(i, f.T - 1, next);
  for (int t = f.T - 2; t >= 0; --t) {
    const auto filt = f.filtered_at(i, t);
    for (int a = 0; a < S; ++a) w[a] = filt[a] * f.transition(i, t + 1, a, next);
    next = categorical(rng, {w, static_cast<std::size_t>(S)});
    out.set(i, t, next);
  }
}

StateSequence backward_sample(const FilterResult& f, int non_baseline, Rng& rng) {
  StateSequence out(f.N, f.T, non_baseline);
  for (int i = 0; i < f.N; ++i) backward_sample_area(f, i, rng, out);
  return out;
}

double marginal_loglik(const Model& model, const ParameterState& params) {
  return forward_filter(model, params).loglik;
}

Eigen::MatrixXd PathPosterior::marginals() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(T, S);
  for (std::size_t p = 0; p < paths.size(); ++p)
    for (int t = 0; t < T; ++t) m(t, paths[p][t]) += probability[p];
  return m;
}

PathPosterior enumerate_posterior(const Model& model, const ParameterState& params, int area, std::size_t max_paths) {
  const int T = model.T(), S = model.states(), D = model.D();
  double count = 1.0;
  for (int t = 0; t < T; ++t) count *= S;
  if (count > static_cast<double>(max_paths))
    throw ValidationError("enumeration would visit " + std::to_string(static_cast<long double>(count)) +
                          " paths, above the limit of " + std::to_string(max_paths));

  // Per-time ingredients evaluated straight from the model formulas.
  std::vector<double> emission(static_cast<std::size_t>(T) * S, 0.0);
  std::vector<double> log_trans(static_cast<std::size_t>(T) * S * S, 0.0);
  for (int t = 1; t < T; ++t) {
    for (int s = 0; s < S; ++s) emission[t * S + s] = model.emission_loglik(params, area, t, s);
    if (S == 1) continue;
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) {
        double l = 0.0;
        for (int d = 0; d < D; ++d) {
          const double eta = model.presence_logit(params, d, area, t, a);
          l += log_logistic(state_has(b, d) ? eta : -eta);
        }
        log_trans[(static_cast<std::size_t>(t) * S + a) * S + b] = l;
      }
  }
  const Eigen::VectorXd init = model.initial_distribution(params, area);

  PathPosterior out;
  out.T = T;
  out.S = S;
  const auto n = static_cast<std::size_t>(count);
  out.paths.reserve(n);
  std::vector<double> logw;
  logw.reserve(n);
  std::vector<int> path(T, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t code = p;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(code % S);
      code /= S;
    }
    double lw = std::log(init(path[0]));
    for (int t = 1; t < T; ++t)
      lw += emission[t * S + path[t]] + log_trans[(static_cast<std::size_t>(t) * S + path[t - 1]) * S + path[t]];
    out.paths.push_back(path);
    logw.push_back(lw);
  }
  out.log_marginal = log_sum_exp(logw);
  out.probability.resize(n);
  for (std::size_t p = 0; p < n; ++p) out.probability[p] = std::exp(logw[p] - out.log_marginal);
  return out;
}

}  // namespace msz
