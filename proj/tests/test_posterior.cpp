#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "msziarmn/errors.hpp"
#include "msziarmn/posterior.hpp"
#include "msziarmn/sampler.hpp"

using namespace msz;

namespace {

struct Fixture {
  Model model;
  PosteriorDraws draws;
};

// A real run whose stored draws are then overwritten with a fixed parameter state.
Fixture fixed_draws(const DiseasePanel& panel, const CovariateBundle& cov, ModelVariant v, const ParameterState& p,
                    int draws, int state) {
  Model m(panel, cov, v);
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = draws;
  cfg.burn_in = 0;
  cfg.store_phi = true;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  auto flat = d.layout.flatten(p);
  auto& c = d.chains[0];
  for (int k = 0; k < draws; ++k) {
    std::copy(flat.begin(), flat.end(), c.params.begin() + static_cast<std::ptrdiff_t>(k) * flat.size());
    std::copy(p.phi.begin(), p.phi.end(), c.phi.begin() + static_cast<std::ptrdiff_t>(k) * p.phi.size());
  }
  std::fill(c.states.begin(), c.states.end(), static_cast<std::uint8_t>(state));
  return {std::move(m), std::move(d)};
}

}  // namespace

TEST_CASE("WAIC of one draw and of identical draws") {
  std::vector<double> ll = {0.0, -1.0, 0.0, -2.5};  // N = 2, T = 2
  auto one = waic_from_logliks(ll, 1, 2, 2);
  CHECK(one.pwaic == 0.0);
  CHECK(one.waic == doctest::Approx(-2.0 * (-3.5)));
  std::vector<double> two = ll;
  two.insert(two.end(), ll.begin(), ll.end());
  auto dup = waic_from_logliks(two, 2, 2, 2);
  CHECK(dup.pwaic == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(dup.waic == doctest::Approx(one.waic).epsilon(1e-14));
}

TEST_CASE("WAIC by hand for two draws") {
  std::vector<double> ll = {0.0, -1.0, 0.0, -3.0};  // N = 1, T = 2, M = 2
  auto r = waic_from_logliks(ll, 2, 1, 2);
  const double lpd = std::log(0.5 * (std::exp(-1.0) + std::exp(-3.0)));
  CHECK(r.lpdd == doctest::Approx(lpd));
  CHECK(r.pwaic == doctest::Approx(2.0));  // sample variance of {-1, -3}
  CHECK(r.waic == doctest::Approx(-2.0 * (lpd - 2.0)));
}

TEST_CASE("WAIC with a zero-likelihood cell names the cell") {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> ll = {0.0, -1.0, 0.0, ninf};
  try {
    waic_from_logliks(ll, 1, 2, 2);
    FAIL("expected an error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("area 2") != std::string::npos);
  }
}

TEST_CASE("stored and recomputed cell likelihoods agree") {
  Rng rng = make_stream(1, 0);
  auto panel = testutil::random_panel(3, 4, 8, rng, 0.5, 3.0);
  auto cov = testutil::random_bundle(panel, rng);
  for (auto v : {ModelVariant::MsZiarmn, ModelVariant::Ziarmn, ModelVariant::Zeng, ModelVariant::Armn}) {
    Model m(panel, cov, v);
    GibbsConfig cfg;
    cfg.chains = 2;
    cfg.iterations = 60;
    cfg.burn_in = 20;
    cfg.store_phi = true;
    auto d = run_gibbs(m, PriorSpec{}, cfg);
    auto a = waic(d), b = waic(d, m);
    CHECK(a.waic == doctest::Approx(b.waic).epsilon(1e-10));
    CHECK(a.pwaic == doctest::Approx(b.pwaic).epsilon(1e-10));
    CHECK(a.pwaic >= 0.0);
    auto re = recompute_cell_logliks(d, m);
    std::size_t n = 0;
    for (const auto& c : d.chains)
      for (double x : c.cell_loglik) CHECK(x == doctest::Approx(re[n++]).epsilon(1e-10));
  }
}

TEST_CASE("summaries") {
  SUBCASE("constant draws") {
    auto s = summarize_values(std::vector<double>(100, 3.25));
    CHECK(s.mean == 3.25);
    CHECK(s.lower == 3.25);
    CHECK(s.upper == 3.25);
  }
  SUBCASE("standard normal draws") {
    Rng rng = make_stream(2, 0);
    std::vector<double> v(200000);
    for (auto& x : v) x = standard_normal(rng);
    auto s = summarize_values(v);
    CHECK(s.lower == doctest::Approx(-1.96).epsilon(0.02));
    CHECK(s.upper == doctest::Approx(1.96).epsilon(0.02));
  }
  SUBCASE("interpolated quantiles") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({5}, 0.975) == 5.0);
  }
  CHECK_THROWS_AS(summarize_values({}), ValidationError);
}

TEST_CASE("presence-weighted lambda and transforms") {
  Rng rng = make_stream(3, 0);
  auto panel = testutil::random_panel(3, 2, 6, rng, 0.0, 4.0);
  auto cov = testutil::random_bundle(panel, rng);
  auto p = testutil::random_params(cov, rng);
  std::fill(p.alpha.begin(), p.alpha.end(), 0.0);
  std::fill(p.phi.begin(), p.phi.end(), 0.0);
  std::fill(p.area_intercept.begin(), p.area_intercept.end(), std::log(2.0));
  auto f = fixed_draws(panel, cov, ModelVariant::MsZiarmn, p, 10, 0);
  auto lb = lambda_bar(f.draws, f.model, 0, 1);
  CHECK(lb.summary.mean == doctest::Approx(2.0));
  CHECK(lb.summary.lower == doctest::Approx(2.0));
  CHECK(lb.used == 10);
  CHECK(lb.excluded == 0);

  auto rows = summarize(f.draws, {{"alpha0i[", Transform::Exp}});
  for (const auto& r : rows)
    if (r.name.rfind("alpha0i[", 0) == 0) {
      CHECK(r.transform == "exp");
      CHECK(r.summary.mean == doctest::Approx(2.0));
    }
}

TEST_CASE("lambda bar excludes draws without presence") {
  Rng rng = make_stream(4, 0);
  std::vector<std::int64_t> c(3 * 1 * 4, 0);
  for (int t = 0; t < 4; ++t) c[t] = 5;  // only the baseline is observed
  auto panel = testutil::make_panel(3, 1, 4, c);
  auto cov = testutil::random_bundle(panel, rng);
  auto p = testutil::random_params(cov, rng);
  auto f = fixed_draws(panel, cov, ModelVariant::MsZiarmn, p, 6, 3);  // both absent
  auto lb = lambda_bar(f.draws, f.model, 1, 0);
  CHECK(lb.used == 0);
  CHECK(lb.excluded == 6);
}

TEST_CASE("presence probability") {
  Rng rng = make_stream(5, 0);
  auto panel = testutil::random_panel(3, 3, 8, rng, 0.5, 3.0);
  auto cov = testutil::random_bundle(panel, rng);
  for (auto v : {ModelVariant::MsZiarmn, ModelVariant::Ziarmn, ModelVariant::Zeng, ModelVariant::Armn}) {
    Model m(panel, cov, v);
    GibbsConfig cfg;
    cfg.chains = 2;
    cfg.iterations = 80;
    cfg.burn_in = 20;
    auto d = run_gibbs(m, PriorSpec{}, cfg);
    for (int i = 0; i < 3; ++i)
      for (int t = 0; t < 8; ++t)
        for (int e = 0; e < 2; ++e) {
          const double pr = presence_probability(d, e, i, t);
          CHECK(pr >= 0.0);
          CHECK(pr <= 1.0);
          if (panel.count(e + 1, i, t) > 0 || v == ModelVariant::Armn) CHECK(pr == 1.0);
        }
  }
}

TEST_CASE("fitted values") {
  Rng rng = make_stream(6, 0);
  std::vector<std::int64_t> c = {
      3, 0, 4, 6,  // baseline, area 1 over 4 times
      2, 0, 1, 0,  //
      0, 0, 5, 0,  //
  };
  auto panel = testutil::make_panel(3, 1, 4, c);
  auto cov = testutil::random_bundle(panel, rng);
  auto p = testutil::random_params(cov, rng);
  p.Sigma = 1e-12 * Eigen::MatrixXd::Identity(2, 2);

  SUBCASE("zero total") {
    auto f = fixed_draws(panel, cov, ModelVariant::MsZiarmn, p, 20, 0);
    for (const auto& y : fitted_values(f.draws, f.model, 0, 1, rng)) CHECK(y == std::vector<std::int64_t>{0, 0, 0});
  }
  SUBCASE("no disease present") {
    auto f = fixed_draws(panel, cov, ModelVariant::MsZiarmn, p, 20, 3);
    for (const auto& y : fitted_values(f.draws, f.model, 0, 3, rng)) CHECK(y == std::vector<std::int64_t>{6, 0, 0});
  }
  SUBCASE("mean matches total times pi") {
    auto f = fixed_draws(panel, cov, ModelVariant::MsZiarmn, p, 4000, 0);
    auto fit = fitted_values(f.draws, f.model, 0, 2, rng);
    double ll[2];
    auto q = f.draws.state(cov, 0, 0);
    std::fill(q.phi.begin(), q.phi.end(), 0.0);
    f.model.log_lambda_star(q, 0, 2, ll);
    const double den = 1.0 + std::exp(ll[0]) + std::exp(ll[1]);
    const double pi[3] = {1.0 / den, std::exp(ll[0]) / den, std::exp(ll[1]) / den};
    double m[3] = {0, 0, 0};
    for (const auto& y : fit)
      for (int k = 0; k < 3; ++k) m[k] += static_cast<double>(y[k]) / fit.size();
    for (int k = 0; k < 3; ++k) {
      const double se = std::sqrt(10 * pi[k] * (1 - pi[k]) / fit.size());
      CHECK(std::abs(m[k] - 10 * pi[k]) < 4 * se);
    }
  }
}
