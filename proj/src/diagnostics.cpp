#include "msziarmn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "msziarmn/errors.hpp"

namespace msz {

namespace {

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double var_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1.0);
}

// Autocovariance at lag `lag` (divisor n), direct sum.
double autocov(std::span<const double> x, double mean, std::size_t lag) {
  double s = 0.0;
  for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - mean) * (x[t + lag] - mean);
  return s / x.size();
}

}  // namespace

std::optional<double> gelman_rubin(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw ValidationError("R-hat needs at least two chains");
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) throw ValidationError("R-hat needs chains of length >= 4");
  const std::size_t half = n / 2;

  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    parts.emplace_back(c.data() + (n - 2 * half), half);
    parts.emplace_back(c.data() + (n - half), half);
  }
  const double m = static_cast<double>(parts.size());
  std::vector<double> means;
  double w = 0.0;
  for (auto p : parts) {
    means.push_back(mean_of(p));
    w += var_of(p);
  }
  w /= m;
  if (!(w > 0.0)) return std::nullopt;
  const double b = half * var_of(means);
  const double var_plus = (half - 1.0) / half * w + b / half;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  if (chains.empty()) return 0.0;
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) return static_cast<double>(n * chains.size());
  const double m = static_cast<double>(chains.size());

  std::vector<double> means, vars;
  for (const auto& c : chains) {
    std::span<const double> s(c.data(), n);
    means.push_back(mean_of(s));
    vars.push_back(var_of(s));
  }
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / m;
  const double b_over_n = m > 1 ? var_of(means) : 0.0;
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  if (!(var_plus > 0.0)) return 0.0;

  auto rho = [&](std::size_t lag) {
    double acov = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c)
      acov += autocov(std::span<const double>(chains[c].data(), n), means[c], lag);
    acov /= m;
    return 1.0 - (w - acov) / var_plus;
  };

  // Geyer: sum adjacent pairs (rho_{2k} + rho_{2k+1}) while positive.
  double sum_pairs = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    sum_pairs += pair;
  }
  const double tau = -1.0 + 2.0 * sum_pairs;
  const double total = m * n;
  return total / std::max(tau, 1.0 / std::log10(total));
}

double effective_sample_size(std::span<const double> chain) {
  return effective_sample_size(std::vector<std::vector<double>>{std::vector<double>(chain.begin(), chain.end())});
}

}  // namespace msz
