#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msziarmn/covariates.hpp"
#include "msziarmn/model.hpp"
#include "msziarmn/panel.hpp"
#include "msziarmn/random.hpp"

namespace testutil {

inline msz::DiseasePanel make_panel(int K, int N, int T, const std::vector<std::int64_t>& counts) {
  std::vector<std::string> names;
  for (int k = 0; k < K; ++k) names.push_back("d" + std::to_string(k + 1));
  std::vector<std::string> areas;
  for (int i = 0; i < N; ++i) areas.push_back("a" + std::to_string(i + 1));
  std::vector<long long> times;
  for (int t = 0; t < T; ++t) times.push_back(t + 1);
  return msz::DiseasePanel(names, areas, times, counts);
}

inline msz::DiseasePanel random_panel(int K, int N, int T, msz::Rng& rng, double zero_prob = 0.4, double mean = 3.0) {
  std::vector<std::int64_t> c(static_cast<std::size_t>(K) * N * T);
  for (auto& v : c) v = msz::uniform01(rng) < zero_prob ? 0 : msz::poisson_draw(rng, mean);
  return make_panel(K, N, T, c);
}

/// One x covariate and one z covariate per non-baseline disease, random values.
inline msz::CovariateBundle random_bundle(const msz::DiseasePanel& p, msz::Rng& rng, int nx = 1, int nz = 1) {
  const int D = p.diseases() - 1;
  std::vector<std::string> names(p.disease_names().begin() + 1, p.disease_names().end());
  std::vector<std::vector<msz::CovariateSeries>> x(D), z(D);
  for (int d = 0; d < D; ++d) {
    for (int j = 0; j < nx; ++j) {
      msz::CovariateSeries s("x" + std::to_string(j), p.areas(), p.times());
      for (int i = 0; i < p.areas(); ++i)
        for (int t = 1; t < p.times(); ++t) s.at(i, t) = msz::standard_normal(rng);
      x[d].push_back(s);
    }
    for (int j = 0; j < nz; ++j) {
      msz::CovariateSeries s("z" + std::to_string(j), p.areas(), p.times());
      for (int i = 0; i < p.areas(); ++i)
        for (int t = 1; t < p.times(); ++t) s.at(i, t) = msz::standard_normal(rng);
      z[d].push_back(s);
    }
  }
  return msz::CovariateBundle(names, p.areas(), p.times(), x, z);
}

inline msz::ParameterState random_params(const msz::CovariateBundle& cov, msz::Rng& rng) {
  auto p = msz::ParameterState::zeros(cov);
  const int K = cov.non_baseline() + 1;
  for (int k = 0; k < K; ++k) p.set_zeta(k, 0.1 + 0.8 * msz::uniform01(rng));
  for (auto& v : p.area_intercept) v = 0.7 * msz::standard_normal(rng);
  for (auto& v : p.alpha) v = 0.5 * msz::standard_normal(rng);
  for (auto& v : p.phi) v = 0.4 * msz::standard_normal(rng);
  for (int d = 0; d < p.D; ++d) {
    p.eta0[d] = msz::standard_normal(rng);
    for (auto& v : p.eta[d]) v = 0.5 * msz::standard_normal(rng);
    p.rho_ar[d] = 1.5 * msz::standard_normal(rng);
    for (int j = 0; j < p.D; ++j)
      if (j != d) p.rho_di(j, d) = msz::standard_normal(rng);
    p.initial_presence[d] = 0.1 + 0.8 * msz::uniform01(rng);
  }
  return p;
}

}  // namespace testutil
