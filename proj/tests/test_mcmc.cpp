#include <cmath>

#include "doctest.h"
#include "msziarmn/diagnostics.hpp"
#include "msziarmn/mcmc.hpp"

using namespace msz;

TEST_CASE("metropolis rule") {
  CHECK(metropolis_accept(0.0, 0.5));
  CHECK(metropolis_accept(std::log(0.6), 0.5));
  CHECK_FALSE(metropolis_accept(std::log(0.4), 0.5));
}

TEST_CASE("adaptation shrinks the step when everything is rejected") {
  ScalarAdaptation a;
  a.interval = 10;
  double last = a.scale;
  for (int n = 0; n < 200; ++n) {
    a.record(false);
    CHECK(a.scale <= last);
    last = a.scale;
  }
  CHECK(a.scale < 1.0);
  a.frozen = true;
  for (int n = 0; n < 100; ++n) a.record(false);
  CHECK(a.scale == last);
}

TEST_CASE("adaptive RWM on a standard normal") {
  Rng rng = make_stream(1, 0);
  ScalarAdaptation a;
  a.scale = 10.0;
  auto lp = [](double x) { return -0.5 * x * x; };
  double x = 3.0, cur = lp(x);
  for (int n = 0; n < 20000; ++n) x = adaptive_rwm_update(x, cur, lp, a, rng);
  a.frozen = true;
  const double frozen_scale = a.scale;
  a.reset_counts();
  const int M = 400000;
  std::vector<double> draws(M);
  for (int n = 0; n < M; ++n) draws[n] = x = adaptive_rwm_update(x, cur, lp, a, rng);
  CHECK(a.scale == frozen_scale);
  double m = 0, v = 0;
  for (double d : draws) m += d;
  m /= M;
  for (double d : draws) v += (d - m) * (d - m);
  v /= M - 1;
  CHECK(std::abs(m) < 0.05);
  CHECK(std::abs(v - 1.0) < 0.1);
  CHECK(a.acceptance_rate() == doctest::Approx(0.44).epsilon(0.15));
}

TEST_CASE("blocked RWM on a correlated bivariate normal") {
  Rng rng = make_stream(2, 0);
  Eigen::Matrix2d S;
  S << 1.0, 0.8, 0.8, 1.0;
  const Eigen::Matrix2d P = S.inverse();
  auto lp = [&](std::span<const double> v) {
    Eigen::Vector2d x(v[0], v[1]);
    return -0.5 * x.dot(P * x);
  };
  BlockAdaptation a(2, 0.01);
  double x[2] = {2.0, -2.0};
  double cur = lp(x);
  for (int n = 0; n < 20000; ++n) blocked_rwm_update(x, cur, lp, a, rng);
  a.frozen = true;
  a.reset_counts();
  const int M = 400000;
  double m0 = 0, m1 = 0, s00 = 0, s11 = 0, s01 = 0;
  for (int n = 0; n < M; ++n) {
    blocked_rwm_update(x, cur, lp, a, rng);
    m0 += x[0];
    m1 += x[1];
    s00 += x[0] * x[0];
    s11 += x[1] * x[1];
    s01 += x[0] * x[1];
  }
  m0 /= M;
  m1 /= M;
  CHECK(std::abs(m0) < 0.05);
  CHECK(std::abs(m1) < 0.05);
  CHECK(std::abs(s00 / M - 1.0) < 0.1);
  CHECK(std::abs(s11 / M - 1.0) < 0.1);
  CHECK(std::abs(s01 / M - 0.8) < 0.1);
  CHECK(a.acceptance_rate() == doctest::Approx(0.234).epsilon(0.3));
}

TEST_CASE("one-dimensional block behaves like a scalar update") {
  Rng rng = make_stream(3, 0);
  BlockAdaptation a(1, 1.0, 0.44);
  auto lp = [](std::span<const double> v) { return -0.5 * v[0] * v[0]; };
  double x[1] = {0.0};
  double cur = 0.0;
  double m = 0, v = 0;
  const int M = 200000;
  for (int n = 0; n < M; ++n) {
    blocked_rwm_update(x, cur, lp, a, rng);
    m += x[0];
    v += x[0] * x[0];
  }
  CHECK(std::abs(m / M) < 0.05);
  CHECK(std::abs(v / M - 1.0) < 0.1);
}

TEST_CASE("R-hat") {
  Rng rng = make_stream(4, 0);
  std::vector<double> a(5000), b(5000);
  for (auto& v : a) v = standard_normal(rng);
  CHECK(gelman_rubin({a, a}).value() == doctest::Approx(1.0).epsilon(0.01));
  for (auto& v : b) v = standard_normal(rng);
  CHECK(gelman_rubin({a, b}).value() < 1.01);
  for (auto& v : b) v += 10.0;
  CHECK(gelman_rubin({a, b}).value() > 1.05);
  std::vector<double> c(100, 3.0);
  CHECK_FALSE(gelman_rubin({c, c}).has_value());
}

TEST_CASE("ESS of an AR(1) chain") {
  Rng rng = make_stream(5, 0);
  const int n = 10000;
  std::vector<double> x(n);
  // Average over replicates to keep the check tight but deterministic.
  double total = 0.0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    double v = standard_normal(rng) / std::sqrt(1 - 0.81);
    for (int t = 0; t < n; ++t) {
      v = 0.9 * v + standard_normal(rng);
      x[t] = v;
    }
    const double ess = effective_sample_size(std::span<const double>(x));
    CHECK(ess == doctest::Approx(n * 0.1 / 1.9).epsilon(0.35));
    total += ess;
  }
  CHECK(total / reps == doctest::Approx(n * 0.1 / 1.9).epsilon(0.2));
  std::vector<double> c(100, 1.0);
  CHECK(effective_sample_size(std::span<const double>(c)) == 0.0);
}
