#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "msziarmn/model.hpp"
#include "msziarmn/random.hpp"

namespace msz {

/// Output of the forward filter for every area.
///
/// Index t = 0 (first time) holds the initial distribution in both
/// `predictive` and `filtered`; the per-cell marginal log-likelihoods are
/// defined for t >= 1 only (0 is stored at t = 0).
struct FilterResult {
  int N = 0, T = 0, S = 0;
  std::vector<double> predictive;   // [(i * T + t) * S + s]
  std::vector<double> filtered;     // [(i * T + t) * S + s]
  std::vector<double> cell_loglik;  // [i * T + t]
  std::vector<double> transitions;  // [((i * T + t) * S + prev) * S + next], t >= 1
  double loglik = 0.0;

  std::span<const double> predictive_at(int i, int t) const { return {&predictive[cell(i, t) * S], static_cast<std::size_t>(S)}; }
  std::span<const double> filtered_at(int i, int t) const { return {&filtered[cell(i, t) * S], static_cast<std::size_t>(S)}; }
  double transition(int i, int t, int prev, int next) const { return transitions[(cell(i, t) * S + prev) * S + next]; }
  std::size_t cell(int i, int t) const { return static_cast<std::size_t>(i) * T + t; }
};

/// Forward filter over t = 2..T for every area, in log space with per-step
/// normalisation. Areas are processed in index order so the accumulated
/// log-likelihood is reproducible bit for bit. Throws NumericalError naming
/// the cell when no state can explain the data.
FilterResult forward_filter(const Model& model, const ParameterState& params);

/// Filters a single area into an already-sized result; returns its log-likelihood.
double forward_filter_area(const Model& model, const ParameterState& params, int i, FilterResult& out);

/// Smoothed marginals P(S*_it = s | y, v) for every (i, t), same layout as `filtered`.
std::vector<double> smoothed_marginals(const FilterResult& filter);

/// Joint draw of all state paths from p(S* | y, v), areas in index order.
StateSequence backward_sample(const FilterResult& filter, int non_baseline, Rng& rng);

/// Draws the path of one area into `out`.
void backward_sample_area(const FilterResult& filter, int i, Rng& rng, StateSequence& out);

/// log p(y | v): sum of the per-cell marginal log-likelihoods.
double marginal_loglik(const Model& model, const ParameterState& params);

/// Exact posterior over every state path of one area, by direct summation of
/// the complete-data likelihood. Paths include the first-time state.
struct PathPosterior {
  int T = 0, S = 0;
  std::vector<std::vector<int>> paths;  // 0-based state indices, length T
  std::vector<double> probability;
  double log_marginal = 0.0;

  /// Marginal P(S*_t = s | y) from the path probabilities.
  Eigen::MatrixXd marginals() const;
};

PathPosterior enumerate_posterior(const Model& model, const ParameterState& params, int area,
                                  std::size_t max_paths = 1'000'000);

}  // namespace msz
