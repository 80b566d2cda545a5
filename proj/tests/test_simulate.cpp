#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msziarmn/errors.hpp"
#include "msziarmn/math.hpp"
#include "msziarmn/simulate.hpp"

using namespace msz;

namespace {

SimulationDesign design(int K, int N, int T, Rng& rng) {
  SimulationDesign d;
  for (int k = 0; k < K; ++k) d.disease_names.push_back("d" + std::to_string(k + 1));
  d.N = N;
  d.T = T;
  std::vector<std::int64_t> shape(static_cast<std::size_t>(K) * N * T, 1);
  d.covariates = testutil::random_bundle(testutil::make_panel(K, N, T, shape), rng);
  return d;
}

}  // namespace

TEST_CASE("ARMN with equal relative odds gives uniform shares") {
  Rng rng = make_stream(1, 0);
  auto des = design(3, 20, 30, rng);
  des.totals.assign(static_cast<std::size_t>(20) * 30, 30);
  auto p = ParameterState::zeros(des.covariates);
  for (int k = 0; k < 3; ++k) p.set_zeta(k, 1e-12);
  p.Sigma = 1e-14 * Eigen::MatrixXd::Identity(2, 2);
  std::fill(p.alpha.begin(), p.alpha.end(), 0.0);
  auto sim = simulate_panel(des, p, ModelVariant::Armn, rng);
  std::int64_t n[3] = {0, 0, 0}, total = 0;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 20; ++i)
      for (int t = 1; t < 30; ++t) {
        n[k] += sim.panel.count(k, i, t);
        if (k == 0) total += sim.panel.total(i, t);
      }
  for (int k = 0; k < 3; ++k) {
    const double share = static_cast<double>(n[k]) / total;
    CHECK(std::abs(share - 1.0 / 3.0) < 4 * std::sqrt((2.0 / 9.0) / total));
  }
}

TEST_CASE("near-absorbing persistence keeps a disease present") {
  Rng rng = make_stream(2, 0);
  auto des = design(3, 5, 40, rng);
  auto p = testutil::random_params(des.covariates, rng);
  p.initial_presence = {1.0, 1.0};
  for (int d = 0; d < 2; ++d) {
    p.eta0[d] = 0.0;
    std::fill(p.eta[d].begin(), p.eta[d].end(), 0.0);
    p.rho_ar[d] = 25.0;
    for (int j = 0; j < 2; ++j)
      if (j != d) p.rho_di(j, d) = 0.0;
  }
  auto sim = simulate_panel(des, p, ModelVariant::MsZiarmn, rng);
  for (int i = 0; i < 5; ++i)
    for (int t = 0; t < 40; ++t)
      for (int d = 0; d < 2; ++d) CHECK(sim.states.present(d, i, t));
}

TEST_CASE("absent diseases have zero counts") {
  Rng rng = make_stream(3, 0);
  std::size_t cells = 0, absent = 0;
  for (auto v : {ModelVariant::MsZiarmn, ModelVariant::Ziarmn, ModelVariant::Zeng}) {
    for (int rep = 0; rep < 5; ++rep) {
      auto des = design(3, 10, 80, rng);
      auto p = testutil::random_params(des.covariates, rng);
      auto sim = simulate_panel(des, p, v, rng);
      for (int i = 0; i < 10; ++i)
        for (int t = 0; t < 80; ++t)
          for (int d = 0; d < 2; ++d) {
            ++cells;
            if (!sim.states.present(d, i, t)) {
              ++absent;
              CHECK(sim.panel.count(d + 1, i, t) == 0);
            }
          }
    }
  }
  CHECK(cells >= 10000);
  CHECK(absent > 0);
}

TEST_CASE("simulation is a deterministic function of the seed") {
  Rng r0 = make_stream(4, 0);
  auto des = design(3, 4, 10, r0);
  auto p = testutil::random_params(des.covariates, r0);
  Rng a = make_stream(99, 0), b = make_stream(99, 0);
  auto s1 = simulate_panel(des, p, ModelVariant::MsZiarmn, a);
  auto s2 = simulate_panel(des, p, ModelVariant::MsZiarmn, b);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 4; ++i)
      for (int t = 0; t < 10; ++t) CHECK(s1.panel.count(k, i, t) == s2.panel.count(k, i, t));
  CHECK(s1.truth.phi == s2.truth.phi);
}

TEST_CASE("invalid designs are rejected") {
  Rng rng = make_stream(5, 0);
  auto des = design(3, 4, 10, rng);
  auto p = ParameterState::zeros(des.covariates);
  des.totals = {1, 2, 3};
  CHECK_THROWS_AS(simulate_panel(des, p, ModelVariant::Armn, rng), ValidationError);
  des.totals.clear();
  des.total_size = 0.0;
  CHECK_THROWS_AS(simulate_panel(des, p, ModelVariant::Armn, rng), ValidationError);
}

namespace {

ReedFrostParams rf_params(int K, int N, int T) {
  ReedFrostParams P;
  P.K = K;
  P.N = N;
  P.T = T;
  P.beta0.assign(static_cast<std::size_t>(K) * N, 0.0);
  P.sigma_rf = Eigen::MatrixXd::Zero(K, K);
  P.zeta.assign(K, 1.0);
  P.population.assign(N, 1000.0);
  return P;
}

}  // namespace

TEST_CASE("Reed-Frost with zero reproduction number dies out") {
  auto P = rf_params(3, 2, 10);
  std::fill(P.beta0.begin(), P.beta0.end(), -std::numeric_limits<double>::infinity());
  Rng rng = make_stream(6, 0);
  auto r = simulate_reed_frost(P, {5, 5, 5, 5, 5, 5}, rng);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 2; ++i)
      for (int t = 1; t < 10; ++t) CHECK(r.counts[(static_cast<std::size_t>(k) * 2 + i) * 10 + t] == 0);
}

TEST_CASE("Reed-Frost conditional mean") {
  auto P = rf_params(2, 1, 3);
  P.beta0 = {std::log(1.3), std::log(0.7)};
  std::vector<std::int64_t> counts = {4, 0, 0, 9, 0, 0};
  std::vector<double> psi = {0.0, 0.0}, S = {1000.0, 1000.0};
  auto m = reed_frost_means(P, counts, 0, 1, psi, 0.0, S);
  CHECK(m[0] == doctest::Approx(1.3 * 5));
  CHECK(m[1] == doctest::Approx(0.7 * 10));
  // The shared factor scales every disease by the same amount.
  auto mb = reed_frost_means(P, counts, 0, 1, psi, 0.4, S);
  CHECK(mb[0] / m[0] == doctest::Approx(std::exp(0.4)));
  CHECK(mb[1] / m[1] == doctest::Approx(std::exp(0.4)));
  // Susceptible fraction and mixing exponent.
  P.zeta = {0.5, 0.5};
  std::vector<double> half = {500.0, 500.0};
  auto mz = reed_frost_means(P, counts, 0, 1, psi, 0.0, half);
  CHECK(mz[0] == doctest::Approx(0.5 * 1.3 * std::sqrt(5.0)));
}

TEST_CASE("Reed-Frost caps explosive means") {
  auto P = rf_params(2, 1, 6);
  P.beta0 = {std::log(50.0), std::log(50.0)};
  P.mean_cap = 1e4;
  Rng rng = make_stream(7, 0);
  auto r = simulate_reed_frost(P, {100, 100}, rng);
  CHECK_FALSE(r.capped.empty());
  for (double m : r.means) CHECK(m <= 1e4);
}

TEST_CASE("Poisson counts conditioned on their total are multinomial") {
  Rng rng = make_stream(8, 0);
  SUBCASE("K = 2, equal means, total 2") {
    std::vector<double> phi = {1.0, 1.0};
    auto r = check_conditioning_identity(phi, 2, 200000, rng);
    CHECK(r.pi[0] == doctest::Approx(0.5));
    CHECK(r.tv_distance < 0.01);
  }
  SUBCASE("rare conditioning event is an error") {
    std::vector<double> phi = {0.01, 0.01};
    CHECK_THROWS_AS(check_conditioning_identity(phi, 40, 1000, rng), NumericalError);
  }
}

TEST_CASE("Reed-Frost to multinomial parameter mapping") {
  Rng rng = make_stream(9, 0);
  auto r = check_parameter_mapping(3, 100, rng);
  CHECK(r.configurations == 100);
  CHECK(r.max_pi_error < 1e-12);
  CHECK(r.max_sigma_error < 1e-12);

  Eigen::Matrix3d S;
  S << 1.0, 0.2, 0.1, 0.2, 2.0, 0.3, 0.1, 0.3, 3.0;
  auto M = mapped_sigma(S);
  CHECK(M(0, 0) == doctest::Approx(2.0 - 0.4 + 1.0));
  CHECK(M(0, 1) == doctest::Approx(0.3 - 0.2 - 0.1 + 1.0));
  CHECK(M(1, 1) == doctest::Approx(3.0 - 0.2 + 1.0));
}

TEST_CASE("correlation study") {
  CHECK(baseline_correlation(0.0, 0.0) == doctest::Approx(-0.5).epsilon(1e-14));
  Rng rng = make_stream(10, 0);
  auto s = correlation_study(std::log(1.14), 0.0, 0.75, 0.8, 10, {-0.8, 0.0, 0.8}, 40000, rng);
  REQUIRE(s.curve.size() == 3);
  CHECK(s.curve[0].corr < s.curve[1].corr);
  CHECK(s.curve[1].corr < s.curve[2].corr);
  for (const auto& c : s.curve) CHECK(c.mc_se > 0.0);
  CHECK(s.crossing.has_value());
}

TEST_CASE("forced perpetual presence reproduces the always-present model") {
  Rng rng = make_stream(11, 0);
  auto des = design(3, 30, 40, rng);
  des.totals.assign(static_cast<std::size_t>(30) * 40, 20);
  auto p = testutil::random_params(des.covariates, rng);
  p.Sigma << 0.3, 0.1, 0.1, 0.2;
  p.initial_presence = {1.0, 1.0};
  for (int d = 0; d < 2; ++d) {
    p.eta0[d] = 30.0;
    std::fill(p.eta[d].begin(), p.eta[d].end(), 0.0);
    p.rho_ar[d] = 0.0;
    for (int j = 0; j < 2; ++j)
      if (j != d) p.rho_di(j, d) = 0.0;
  }
  // Disease shares over many replicate panels, two-sample z-test per disease.
  auto shares = [&](ModelVariant v, std::uint64_t stream) {
    std::vector<std::vector<double>> out(3);
    Rng r = make_stream(12, stream);
    for (int rep = 0; rep < 40; ++rep) {
      auto sim = simulate_panel(des, p, v, r);
      double n[3] = {0, 0, 0}, tot = 0;
      for (int i = 0; i < 30; ++i)
        for (int t = 1; t < 40; ++t) {
          for (int k = 0; k < 3; ++k) n[k] += sim.panel.count(k, i, t);
          tot += sim.panel.total(i, t);
        }
      for (int k = 0; k < 3; ++k) out[k].push_back(n[k] / tot);
    }
    return out;
  };
  auto a = shares(ModelVariant::MsZiarmn, 1), b = shares(ModelVariant::Armn, 2);
  for (int k = 0; k < 3; ++k) {
    double ma = 0, mb = 0, va = 0, vb = 0;
    for (int r = 0; r < 40; ++r) {
      ma += a[k][r] / 40;
      mb += b[k][r] / 40;
    }
    for (int r = 0; r < 40; ++r) {
      va += (a[k][r] - ma) * (a[k][r] - ma) / 39;
      vb += (b[k][r] - mb) * (b[k][r] - mb) / 39;
    }
    CHECK(std::abs(ma - mb) < 4 * std::sqrt(va / 40 + vb / 40));
  }
}
