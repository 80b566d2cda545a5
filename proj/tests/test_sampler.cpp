#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "msziarmn/diagnostics.hpp"
#include "msziarmn/errors.hpp"
#include "msziarmn/ffbs.hpp"
#include "msziarmn/posterior.hpp"
#include "msziarmn/sampler.hpp"

using namespace msz;

namespace {

struct Small {
  DiseasePanel panel;
  CovariateBundle cov;
};

Small small_problem(std::uint64_t seed, int N = 3, int T = 6) {
  Rng rng = make_stream(seed, 0);
  auto panel = testutil::random_panel(3, N, T, rng, 0.5, 3.0);
  auto cov = testutil::random_bundle(panel, rng);
  return {panel, cov};
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }
double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("zero-iteration run gives empty draws and a ledger") {
  auto s = small_problem(1);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  GibbsConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 0;
  cfg.burn_in = 0;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  CHECK(d.chains.size() == 2);
  CHECK(d.total_draws() == 0);
  CHECK_FALSE(d.chains[0].ledger.entries.empty());
}

TEST_CASE("draw count follows burn-in and thinning") {
  auto s = small_problem(2);
  Model m(s.panel, s.cov, ModelVariant::Ziarmn);
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 70;
  cfg.burn_in = 10;
  cfg.thin = 3;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  CHECK(d.draws_per_chain() == 20);
  CHECK(d.chains[0].params.size() == 20u * d.layout.size());
  CHECK_THROWS_AS(run_gibbs(m, PriorSpec{}, GibbsConfig{.iterations = 5, .burn_in = 10}), ValidationError);
}

TEST_CASE("ARMN skips the state step") {
  auto s = small_problem(3);
  Model m(s.panel, s.cov, ModelVariant::Armn);
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 30;
  cfg.burn_in = 10;
  cfg.store_phi = true;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  CHECK_FALSE(d.has_states());
  for (const auto& n : d.layout.names) CHECK(n.rfind("eta", 0) == std::string::npos);
  // Stored per-cell terms are the plain emission log-likelihoods.
  auto p = d.state(s.cov, 0, 5);
  auto ll = d.cell_loglik(0, 5);
  for (int i = 0; i < m.N(); ++i)
    for (int t = 1; t < m.T(); ++t)
      CHECK(ll[i * m.T() + t] == doctest::Approx(m.emission_loglik(p, i, t, 0)).epsilon(1e-10));
}

TEST_CASE("layout round trip") {
  auto s = small_problem(4);
  Rng rng = make_stream(4, 1);
  auto p = testutil::random_params(s.cov, rng);
  for (auto v : {ModelVariant::MsZiarmn, ModelVariant::Ziarmn, ModelVariant::Zeng, ModelVariant::Armn}) {
    Model m(s.panel, s.cov, v);
    auto L = ParameterLayout::make(m);
    auto flat = L.flatten(p);
    auto q = ParameterState::zeros(s.cov);
    L.unflatten(flat, q);
    CHECK(L.flatten(q) == flat);
  }
}

TEST_CASE("seeded runs are bit-for-bit reproducible, whatever the thread count") {
  auto s = small_problem(5);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  GibbsConfig cfg;
  cfg.chains = 3;
  cfg.iterations = 60;
  cfg.burn_in = 20;
  cfg.seed = 42;
  cfg.store_phi = true;
  cfg.threads = 1;
  auto a = run_gibbs(m, PriorSpec{}, cfg);
  cfg.threads = 3;
  auto b = run_gibbs(m, PriorSpec{}, cfg);
  for (int c = 0; c < 3; ++c) {
    CHECK(a.chains[c].params == b.chains[c].params);
    CHECK(a.chains[c].phi == b.chains[c].phi);
    CHECK(a.chains[c].states == b.chains[c].states);
    CHECK(a.chains[c].cell_loglik == b.chains[c].cell_loglik);
  }
  CHECK(a.chains[0].params != a.chains[1].params);
  cfg.seed = 43;
  auto c = run_gibbs(m, PriorSpec{}, cfg);
  CHECK(c.chains[0].params != a.chains[0].params);
}

TEST_CASE("adaptation is frozen after burn-in") {
  auto s = small_problem(6);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 600;
  cfg.burn_in = 300;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  for (const auto& e : d.chains[0].ledger.entries) {
    CHECK(e.scale_at_burn_in == e.scale_final);
    CHECK(e.acceptance >= 0.0);
    CHECK(e.acceptance <= 1.0);
  }
}

TEST_CASE("posterior state draws respect observed positives") {
  auto s = small_problem(7, 4, 8);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 200;
  cfg.burn_in = 100;
  auto d = run_gibbs(m, PriorSpec{}, cfg);
  for (std::size_t k = 0; k < d.draws_per_chain(); ++k) {
    auto st = d.state_sequence(0, k);
    for (int i = 0; i < m.N(); ++i)
      for (int t = 0; t < m.T(); ++t)
        for (int e = 0; e < m.D(); ++e)
          if (!st.present(e, i, t)) CHECK(s.panel.count(e + 1, i, t) == 0);
  }
}

TEST_CASE("states-only run matches the enumeration oracle") {
  auto s = small_problem(8, 2, 4);
  Rng rng = make_stream(8, 1);
  auto p = testutil::random_params(s.cov, rng);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  PriorSpec prior;
  prior.initial_presence = p.initial_presence;
  GibbsConfig cfg;
  cfg.chains = 1;
  cfg.iterations = 40000;
  cfg.burn_in = 0;
  cfg.update_parameters = false;
  auto d = run_gibbs(m, prior, cfg, &p);
  CHECK(d.state(s.cov, 0, 0).alpha == p.alpha);
  for (int i = 0; i < 2; ++i) {
    auto exact = enumerate_posterior(m, p, i).marginals();
    for (int t = 0; t < 4; ++t)
      for (int e = 0; e < 2; ++e) {
        double target = 0.0;
        for (int st = 0; st < 4; ++st)
          if (state_has(st, e)) target += exact(t, st);
        const double est = presence_probability(d, e, i, t);
        const double se = std::sqrt(std::max(0.0, target * (1 - target)) / 40000.0);
        CHECK(std::abs(est - target) <= 4 * se + 1e-12);
      }
  }
}

TEST_CASE("conjugate Sigma update") {
  Rng rng = make_stream(9, 0);
  SUBCASE("zero phi: IW(K + N(T-1), I) moments") {
    const int D = 2;
    const long long n = 30;
    PriorSpec prior;  // IW(K, I)
    const double df = D + 1 + n;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(D, D), sq = Eigen::MatrixXd::Zero(D, D);
    const int M = 100000;
    for (int m = 0; m < M; ++m) {
      auto S = update_sigma(Eigen::MatrixXd::Zero(D, D), n, prior, rng);
      sum += S;
      sq += S.cwiseProduct(S);
    }
    Eigen::MatrixXd mean = sum / M;
    const double m_diag = 1.0 / (df - D - 1);
    const double v_diag = 2.0 / ((df - D - 1) * (df - D - 1) * (df - D - 3));
    const double v_off = (df - D - 1) / ((df - D) * (df - D - 1) * (df - D - 1) * (df - D - 3));
    CHECK(std::abs(mean(0, 0) - m_diag) < 4 * std::sqrt(v_diag / M));
    CHECK(std::abs(mean(1, 1) - m_diag) < 4 * std::sqrt(v_diag / M));
    CHECK(std::abs(mean(0, 1)) < 4 * std::sqrt(v_off / M));
    CHECK((sq(0, 0) / M - mean(0, 0) * mean(0, 0)) == doctest::Approx(v_diag).epsilon(0.05));
  }
  SUBCASE("one dimension reduces to inverse-gamma") {
    PriorSpec prior;
    prior.iw_df = 3.0;
    prior.iw_scale = Eigen::MatrixXd::Constant(1, 1, 2.0);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Constant(1, 1, 5.0);
    // Inverse-gamma(shape (3 + 10)/2, scale (2 + 5)/2): mean 7 / 11.
    double s = 0;
    const int M = 100000;
    for (int m = 0; m < M; ++m) s += update_sigma(scatter, 10, prior, rng)(0, 0);
    CHECK(s / M == doctest::Approx(7.0 / 11.0).epsilon(0.01));
  }
  SUBCASE("posterior mean approaches the sample covariance") {
    Eigen::Matrix2d truth;
    truth << 0.5, 0.2, 0.2, 0.3;
    Eigen::MatrixXd L = truth.llt().matrixL();
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(2, 2);
    const long long n = 50000;
    for (long long k = 0; k < n; ++k) {
      auto f = mvn_draw(rng, L);
      scatter += f * f.transpose();
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
    for (int m = 0; m < 2000; ++m) sum += update_sigma(scatter, n, PriorSpec{}, rng);
    CHECK(((sum / 2000) - scatter / n).cwiseAbs().maxCoeff() < 0.005);
  }
}

TEST_CASE("population intercept shrinks towards the prior mean") {
  Rng rng = make_stream(10, 0);
  std::vector<double> one = {4.0};
  double s = 0;
  for (int m = 0; m < 20000; ++m) s += draw_population_intercept(one, 1.0, 0.0, 2.0, rng);
  const double mean = s / 20000;
  CHECK(mean > 0.0);
  CHECK(mean < 4.0);
  CHECK(mean == doctest::Approx(4.0 * 4.0 / 5.0).epsilon(0.02));
}

TEST_CASE("prior-only sampling reproduces the priors") {
  auto s = small_problem(11, 2, 3);
  Model m(s.panel, s.cov, ModelVariant::MsZiarmn);
  PriorSpec prior;
  prior.sigma_scale = 1.0;
  prior.iw_df = 10.0;
  GibbsConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 100000;
  cfg.burn_in = 5000;
  cfg.thin = 5;
  cfg.likelihood_off = true;
  cfg.store_cell_loglik = false;
  cfg.store_states = false;
  auto d = run_gibbs(m, prior, cfg);

  const double nu = 10.0, D = 2.0;
  const double sig_mean = 1.0 / (nu - D - 1);
  const double sig_sd = std::sqrt(2.0 / ((nu - D - 1) * (nu - D - 1) * (nu - D - 3)));
  const double off_sd = std::sqrt((nu - D - 1) / ((nu - D) * (nu - D - 1) * (nu - D - 1) * (nu - D - 3)));
  for (int j = 0; j < d.layout.size(); ++j) {
    const auto& name = d.layout.names[j];
    double mu, sd;
    if (name.rfind("zeta", 0) == 0) {
      mu = 0.5;
      sd = std::sqrt(1.0 / 12.0);
    } else if (name.rfind("sigma", 0) == 0) {
      mu = std::sqrt(2.0 / M_PI);
      sd = std::sqrt(1.0 - 2.0 / M_PI);
    } else if (name.rfind("Sigma", 0) == 0) {
      const bool diag = name == "Sigma[d2:d2]" || name == "Sigma[d3:d3]";
      mu = diag ? sig_mean : 0.0;
      sd = diag ? sig_sd : off_sd;
    } else if (name.rfind("alpha0i", 0) == 0) {
      mu = 0.0;
      sd = std::sqrt(100.0 + 1.0);
    } else {
      mu = 0.0;
      sd = 10.0;
    }
    auto ser = d.series(j);
    std::vector<double> all;
    for (auto& c : ser) all.insert(all.end(), c.begin(), c.end());
    const double ess = effective_sample_size(ser);
    const double se_mean = sd / std::sqrt(ess);
    INFO(name << " mean " << mean_of(all) << " sd " << sd_of(all) << " ess " << ess);
    CHECK(ess > 200);
    CHECK(std::abs(mean_of(all) - mu) < 3 * se_mean);
    // Variance check, with its standard error from the squared-deviation series.
    std::vector<std::vector<double>> sq(ser.size());
    std::vector<double> sq_all;
    for (std::size_t c = 0; c < ser.size(); ++c)
      for (double x : ser[c]) {
        sq[c].push_back((x - mu) * (x - mu));
        sq_all.push_back(sq[c].back());
      }
    const double se_var = sd_of(sq_all) / std::sqrt(effective_sample_size(sq));
    CHECK(std::abs(mean_of(sq_all) - sd * sd) < 3 * se_var);
  }
}
