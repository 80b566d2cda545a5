#include "msziarmn/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "msziarmn/csv.hpp"
#include "msziarmn/draws_io.hpp"
#include "msziarmn/errors.hpp"
#include "msziarmn/simulate.hpp"

#ifndef MSZIARMN_VERSION
#define MSZIARMN_VERSION "unknown"
#endif

namespace msz {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

RunConfig effective_config(const CommandOptions& opts) {
  if (opts.config.empty()) throw ValidationError("--config is required");
  RunConfig cfg = RunConfig::load(opts.config);
  if (opts.variant) cfg.variant = parse_variant(*opts.variant);
  if (opts.seed) cfg.mcmc.seed = *opts.seed;
  if (opts.threads) {
    if (*opts.threads < 0) throw ValidationError("--threads must be non-negative");
    cfg.mcmc.threads = *opts.threads;
  }
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  return cfg;
}

namespace {

json data_hashes(const RunConfig& cfg) {
  json d = json::object();
  if (!cfg.counts.empty()) d["counts"] = sha256_file(cfg.counts);
  if (!cfg.adjacency.empty()) d["adjacency"] = sha256_file(cfg.adjacency);
  if (!cfg.population.empty()) d["population"] = sha256_file(cfg.population);
  if (!cfg.covariates.empty()) d["covariates"] = sha256_file(cfg.covariates);
  return d;
}

json base_manifest(const std::string& command, const RunConfig& cfg) {
  json m;
  m["command"] = command;
  m["version"] = MSZIARMN_VERSION;
  m["schema_version"] = RunConfig::kSchemaVersion;
  m["config_sha256"] = sha256_hex(cfg.text);
  m["variant"] = std::string(to_string(cfg.variant));
  m["seed"] = cfg.mcmc.seed;
  return m;
}

void write_manifest(json m, const fs::path& dir, const std::string& name, const std::vector<std::string>& outputs) {
  json h = json::object();
  for (const auto& f : outputs)
    if (fs::exists(dir / f)) h[f] = sha256_file(dir / f);
  m["outputs_sha256"] = h;
  std::ofstream os(dir / name, std::ios::binary);
  if (!os) throw ValidationError("cannot write " + (dir / name).string());
  os << m.dump(2) << '\n';
}

json mcmc_json(const GibbsConfig& g) {
  return {{"chains", g.chains},       {"iterations", g.iterations}, {"burn_in", g.burn_in},
          {"thin", g.thin},           {"adapt_interval", g.adapt_interval},
          {"store_phi", g.store_phi}, {"store_states", g.store_states}, {"store_cell_loglik", g.store_cell_loglik}};
}

PriorSpec prior_for(const RunConfig& cfg, const DiseasePanel& panel) {
  PriorSpec p = cfg.prior;
  p.initial_presence = cfg.presence_vector(panel.disease_names());
  return p;
}

// ---- simulate ----

std::vector<CovariateSeries> generate_covariates(const RunConfig& cfg, int N, int T, Rng& rng) {
  std::vector<CovariateSeries> out;
  for (const auto& [name, g] : cfg.simulate->generate) {
    CovariateSeries s(name, N, T);
    for (int i = 0; i < N; ++i)
      for (int t = 1; t < T; ++t) {
        if (g.kind == "normal") {
          s.at(i, t) = standard_normal(rng);
        } else {
          s.at(i, t) = std::sin(2.0 * std::numbers::pi * (t + 1) / g.period + i) + g.noise * standard_normal(rng);
        }
      }
    out.push_back(s);
  }
  return out;
}

template <class V>
void expect_size(const V& v, std::size_t n, const std::string& key) {
  if (v.size() != n) throw ValidationError("simulate.truth." + key + ": expected " + std::to_string(n) + " entries");
}

ParameterState truth_state(const RunConfig& cfg, const CovariateBundle& cov, Rng& rng) {
  const auto& t = cfg.simulate->truth;
  const int D = cov.non_baseline();
  auto p = ParameterState::zeros(cov);
  expect_size(t.zeta, D + 1, "zeta");
  for (int k = 0; k <= D; ++k) {
    if (!(t.zeta[k] > 0.0 && t.zeta[k] < 1.0)) throw ValidationError("simulate.truth.zeta: entries must lie in (0, 1)");
    p.set_zeta(k, t.zeta[k]);
  }
  expect_size(t.alpha0, D, "alpha0");
  expect_size(t.sigma, D, "sigma");
  p.alpha0 = t.alpha0;
  p.sigma = t.sigma;
  for (int d = 0; d < D; ++d) {
    if (!(t.sigma[d] > 0.0)) throw ValidationError("simulate.truth.sigma: entries must be positive");
    for (int i = 0; i < p.N; ++i) p.area_int(d, i) = t.alpha0[d] + t.sigma[d] * standard_normal(rng);
  }
  const auto& free = cov.free_alpha_names();
  for (const auto& [k, v] : t.alpha) {
    auto it = std::find(free.begin(), free.end(), k);
    if (it == free.end()) throw ValidationError("simulate.truth.alpha." + k + ": no such coefficient");
    p.alpha[it - free.begin()] = v;
  }
  if (t.Sigma.rows() != D) throw ValidationError("simulate.truth.Sigma: expected a " + std::to_string(D) + "x" +
                                                 std::to_string(D) + " matrix");
  if (t.Sigma.llt().info() != Eigen::Success || !t.Sigma.isApprox(t.Sigma.transpose()))
    throw ValidationError("simulate.truth.Sigma: must be symmetric positive definite");
  p.Sigma = t.Sigma;
  const auto& names = cov.disease_names();
  if (!t.eta0.empty()) {
    expect_size(t.eta0, D, "eta0");
    p.eta0 = t.eta0;
  }
  for (const auto& [k, v] : t.eta) {
    bool found = false;
    for (int d = 0; d < D && !found; ++d)
      for (int j = 0; j < cov.z_count(d) && !found; ++j)
        if (k == names[d] + ":" + cov.z_names(d)[j]) {
          p.eta[d][j] = v;
          found = true;
        }
    if (!found) throw ValidationError("simulate.truth.eta." + k + ": no such presence coefficient");
  }
  if (!t.rho_ar.empty()) {
    expect_size(t.rho_ar, D, "rho_ar");
    p.rho_ar = t.rho_ar;
  }
  for (const auto& [k, v] : t.rho_di) {
    bool found = false;
    for (int j = 0; j < D && !found; ++j)
      for (int d = 0; d < D && !found; ++d)
        if (j != d && k == names[j] + "->" + names[d]) {
          p.rho_di(j, d) = v;
          found = true;
        }
    if (!found) throw ValidationError("simulate.truth.rho_di." + k + ": no such interaction");
  }
  if (!t.initial_presence.empty()) {
    expect_size(t.initial_presence, D, "initial_presence");
    p.initial_presence = t.initial_presence;
  } else {
    std::vector<std::string> all = {"baseline"};
    all.insert(all.end(), names.begin(), names.end());
    p.initial_presence = cfg.presence_vector(all);
  }
  for (double q : p.initial_presence)
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("simulate.truth.initial_presence: entries must lie in [0, 1]");
  return p;
}

AreaMetadata ring(int N, double population) {
  AreaMetadata m;
  m.neighbors.assign(N, {});
  m.population.assign(N, population);
  for (int i = 0; i < N && N > 1; ++i) {
    const int j = (i + 1) % N;
    if (j == i) continue;
    if (std::find(m.neighbors[i].begin(), m.neighbors[i].end(), j) == m.neighbors[i].end()) {
      m.neighbors[i].push_back(j);
      m.neighbors[j].push_back(i);
    }
  }
  for (auto& n : m.neighbors) std::sort(n.begin(), n.end());
  return m;
}

// ---- waic / summarize ----

struct Loaded {
  RunConfig cfg;
  FitInputs in;
  fs::path draws_dir, out_dir;
  PosteriorDraws draws;
};

Loaded load_fit(const CommandOptions& opts) {
  Loaded L{effective_config(opts), {}, {}, {}, {}};
  L.draws_dir = opts.draws_dir ? *opts.draws_dir : L.cfg.output_dir;
  L.out_dir = opts.output_dir ? *opts.output_dir : L.draws_dir;
  L.in = load_inputs(L.cfg);
  const fs::path mf = L.draws_dir / "manifest.json";
  if (!fs::exists(mf)) throw ValidationError("no manifest.json in " + L.draws_dir.string());
  json m;
  try {
    std::ifstream is(mf, std::ios::binary);
    m = json::parse(is);
  } catch (const json::exception&) {
    throw ValidationError(mf.string() + ": malformed manifest");
  }
  if (m.value("command", "") != "fit") throw ValidationError(mf.string() + ": not the manifest of a fit");
  if (m.value("data_sha256", json::object()) != data_hashes(L.cfg))
    throw ValidationError("refusing: the draws in " + L.draws_dir.string() +
                          " were produced from different data files than the configuration references");
  if (m.value("variant", "") != std::string(to_string(L.cfg.variant)))
    throw ValidationError("refusing: the draws were produced by variant " + m.value("variant", std::string("?")) +
                          ", the configuration asks for " + std::string(to_string(L.cfg.variant)));
  Model model(L.in.panel, L.in.covariates, L.cfg.variant);
  L.draws = read_draws(model, L.cfg.presence_vector(L.in.panel.disease_names()), L.draws_dir);
  if (L.draws.total_draws() == 0) throw ValidationError(L.draws_dir.string() + ": no draws");
  return L;
}

std::vector<std::string> write_summaries(const RunConfig& cfg, const Model& model, const PosteriorDraws& draws,
                                         const fs::path& dir, std::ostream& log) {
  std::vector<std::string> files;
  const auto& panel = model.panel();
  write_summary(summarize(draws, cfg.summary.transforms), dir / "summary.csv");
  files.push_back("summary.csv");
  write_convergence(convergence_table(draws), dir / "convergence.csv");
  files.push_back("convergence.csv");
  if (draws.has_states() || draws.variant == ModelVariant::Armn) {
    write_presence(draws, panel, dir / "presence.csv");
    files.push_back("presence.csv");
  }
  if (cfg.summary.lambda_bar && draws.has_phi()) {
    std::ofstream os(dir / "lambda_bar.csv", std::ios::binary);
    csv::write_row(os, {"disease", "area", "mean", "lower95", "upper95", "draws_used", "draws_excluded"});
    for (int d = 0; d < model.D(); ++d)
      for (int i = 0; i < model.N(); ++i) {
        auto lb = lambda_bar(draws, model, d, i);
        const bool any = lb.used > 0;
        csv::write_row(os, {panel.disease_names()[d + 1], panel.area_labels()[i],
                            any ? csv::format_double(lb.summary.mean) : "NA",
                            any ? csv::format_double(lb.summary.lower) : "NA",
                            any ? csv::format_double(lb.summary.upper) : "NA", std::to_string(lb.used),
                            std::to_string(lb.excluded)});
      }
    files.push_back("lambda_bar.csv");
  } else if (cfg.summary.lambda_bar) {
    log << "lambda_bar skipped: phi draws were not stored (output.store_phi)\n";
  }
  for (const auto& rc : cfg.summary.response_curves) {
    const int k = panel.disease_index(rc.disease);
    if (k < 1) throw ValidationError("summary.response_curves: '" + rc.disease + "' is not a non-baseline disease");
    const auto& xs = model.covariates().x_names(k - 1);
    auto it = std::find(xs.begin(), xs.end(), rc.covariate);
    if (it == xs.end())
      throw ValidationError("summary.response_curves: disease '" + rc.disease + "' has no x covariate '" +
                            rc.covariate + "'");
    std::vector<double> grid(rc.points);
    for (int g = 0; g < rc.points; ++g) grid[g] = rc.from + (rc.to - rc.from) * g / (rc.points - 1);
    auto curve = response_curve(draws, model, k - 1, static_cast<int>(it - xs.begin()), grid, rc.threshold);
    const std::string name = "response_" + rc.disease + "_" + rc.covariate + ".csv";
    std::ofstream os(dir / name, std::ios::binary);
    csv::write_row(os, {"value", "mean", "lower95", "upper95", "crosses_threshold"});
    for (std::size_t g = 0; g < grid.size(); ++g) {
      std::string cross;
      for (double c : curve.crossings)
        if (g + 1 < grid.size() && c >= grid[g] && c < grid[g + 1]) cross = csv::format_double(c);
      csv::write_row(os, {csv::format_double(grid[g]), csv::format_double(curve.lambda[g].mean),
                          csv::format_double(curve.lambda[g].lower), csv::format_double(curve.lambda[g].upper), cross});
    }
    files.push_back(name);
  }
  if (cfg.summary.fitted) {
    Rng rng = make_stream(cfg.mcmc.seed, 0xF17ED);
    std::ofstream os(dir / "fitted.csv", std::ios::binary);
    csv::write_row(os, {"disease", "area", "time", "observed", "mean", "lower95", "upper95"});
    for (int i = 0; i < model.N(); ++i)
      for (int t = 1; t < model.T(); ++t) {
        auto y = fitted_values(draws, model, i, t, rng);
        for (int k = 0; k < model.K(); ++k) {
          std::vector<double> v;
          v.reserve(y.size());
          for (const auto& r : y) v.push_back(static_cast<double>(r[k]));
          auto s = summarize_values(v);
          csv::write_row(os, {panel.disease_names()[k], panel.area_labels()[i], std::to_string(panel.time_labels()[t]),
                              std::to_string(panel.count(k, i, t)), csv::format_double(s.mean),
                              csv::format_double(s.lower), csv::format_double(s.upper)});
        }
      }
    files.push_back("fitted.csv");
  }
  return files;
}

}  // namespace

int cmd_simulate(const CommandOptions& opts, std::ostream& log) {
  RunConfig cfg = effective_config(opts);
  if (!cfg.simulate) throw ValidationError(cfg.source.string() + ": simulate: section required");
  const auto& sim = *cfg.simulate;
  if (cfg.diseases.size() < 2) throw ValidationError(cfg.source.string() + ": data.diseases: simulate needs the names");
  for (const auto& [d, dc] : cfg.disease_covariates)
    for (const auto* v : {&dc.x, &dc.z})
      for (const auto& c : *v)
        if (c.source != CovariateDecl::Source::External)
          throw ValidationError("covariates." + d + ": simulation supports generated (external) covariates only");
  if (sim.N < 1 || sim.T < 2) throw ValidationError("simulate: need N >= 1 and T >= 2");

  Rng rng = make_stream(cfg.mcmc.seed, 1000003);
  const int K = static_cast<int>(cfg.diseases.size());
  std::vector<std::string> areas;
  for (int i = 0; i < sim.N; ++i) areas.push_back("area" + std::to_string(i + 1));
  std::vector<long long> times;
  for (int t = 0; t < sim.T; ++t) times.push_back(t + 1);
  DiseasePanel skeleton(cfg.diseases, areas, times, std::vector<std::int64_t>(static_cast<std::size_t>(K) * sim.N * sim.T, 0));

  const auto generated = generate_covariates(cfg, sim.N, sim.T, rng);
  const AreaMetadata meta = ring(sim.N, sim.population);
  SimulationDesign design;
  design.disease_names = cfg.diseases;
  design.N = sim.N;
  design.T = sim.T;
  design.covariates = build_covariates(cfg, skeleton, &meta, generated);
  design.total_mean = sim.total_mean;
  design.total_size = sim.total_size;
  const ParameterState truth = truth_state(cfg, design.covariates, rng);
  const auto out = simulate_panel(design, truth, cfg.variant, rng);

  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_panel(out.panel, dir / "counts.csv");
  write_area_metadata(out.panel, meta, dir / "adjacency.csv", dir / "population.csv");
  std::vector<std::string> files = {"counts.csv", "adjacency.csv", "population.csv"};
  if (!generated.empty()) {
    write_covariates(out.panel, generated, dir / "covariates.csv");
    files.push_back("covariates.csv");
  }
  Model model(out.panel, design.covariates, cfg.variant);
  write_parameters(ParameterLayout::make(model), out.truth, dir / "truth.csv");
  files.push_back("truth.csv");
  {
    std::ofstream os(dir / "truth_phi.csv", std::ios::binary);
    csv::write_row(os, {"disease", "area", "time", "phi"});
    for (int d = 0; d < model.D(); ++d)
      for (int i = 0; i < sim.N; ++i)
        for (int t = 1; t < sim.T; ++t)
          csv::write_row(os, {cfg.diseases[d + 1], areas[i], std::to_string(times[t]),
                              csv::format_double(out.truth.phi_cell(i, t)[d])});
    files.push_back("truth_phi.csv");
  }
  if (has_latent_states(cfg.variant)) {
    write_state_sequence(out.states, out.panel, dir / "truth_states.csv");
    files.push_back("truth_states.csv");
  }

  // A configuration that fits the simulated data with the same design.
  json fit = json::parse(cfg.text);
  fit.erase("simulate");
  fit["data"] = {{"counts", "counts.csv"}, {"adjacency", "adjacency.csv"}, {"population", "population.csv"},
                 {"diseases", cfg.diseases}};
  if (!generated.empty()) fit["data"]["covariates"] = "covariates.csv";
  fit["variant"] = std::string(to_string(cfg.variant));
  json q = json::object();
  for (int d = 0; d < model.D(); ++d) q[cfg.diseases[d + 1]] = std::clamp(truth.initial_presence[d], 1e-6, 1 - 1e-6);
  fit["initial_presence"] = q;
  if (!fit.contains("output")) fit["output"] = json::object();
  fit["output"]["dir"] = "fit";
  {
    std::ofstream os(dir / "fit_config.json", std::ios::binary);
    os << fit.dump(2) << '\n';
  }
  files.push_back("fit_config.json");

  json m = base_manifest("simulate", cfg);
  m["design"] = {{"N", sim.N}, {"T", sim.T}, {"diseases", cfg.diseases}};
  write_manifest(m, dir, "manifest.json", files);
  log << "simulated " << K << " diseases x " << sim.N << " areas x " << sim.T << " times (" << to_string(cfg.variant)
      << ") into " << dir.string() << "\n";
  return kOk;
}

int cmd_fit(const CommandOptions& opts, std::ostream& log) {
  RunConfig cfg = effective_config(opts);
  FitInputs in = load_inputs(cfg);
  Model model(in.panel, in.covariates, cfg.variant);
  const PriorSpec prior = prior_for(cfg, in.panel);
  log << "fitting " << to_string(cfg.variant) << ": " << cfg.mcmc.chains << " chains x " << cfg.mcmc.iterations
      << " iterations (burn-in " << cfg.mcmc.burn_in << ", thin " << cfg.mcmc.thin << ")\n";
  const auto draws = run_gibbs(model, prior, cfg.mcmc);

  const fs::path dir = cfg.output_dir;
  write_draws(draws, in.panel, dir);
  std::vector<std::string> files = {"draws.csv", "phi.csv", "states.csv", "cell_loglik.csv", "adaptation.csv"};
  json m = base_manifest("fit", cfg);
  m["data_sha256"] = data_hashes(cfg);
  m["mcmc"] = mcmc_json(cfg.mcmc);
  m["initial_presence"] = prior.initial_presence;

  if (draws.total_draws() > 0) {
    auto more = write_summaries(cfg, model, draws, dir, log);
    files.insert(files.end(), more.begin(), more.end());
    if (draws.has_cell_loglik() || draws.has_phi()) {
      const auto w = draws.has_cell_loglik() ? waic(draws) : waic(draws, model);
      write_waic(w, in.panel, dir / "waic.csv", dir / "waic_cells.csv");
      files.push_back("waic.csv");
      files.push_back("waic_cells.csv");
      m["waic"] = {{"lpdd", csv::format_double(w.lpdd)}, {"pwaic", csv::format_double(w.pwaic)},
                   {"waic", csv::format_double(w.waic)}};
      log << "WAIC " << csv::format_double(w.waic) << " (lpdd " << csv::format_double(w.lpdd) << ", pwaic "
          << csv::format_double(w.pwaic) << ")\n";
    }
  }

  // Convergence against the R-hat threshold.
  std::vector<std::string> failing;
  double max_rhat = 0.0, min_ess = std::numeric_limits<double>::infinity();
  if (draws.chains.size() >= 2 && draws.draws_per_chain() >= 4)
    for (const auto& r : convergence_table(draws)) {
      min_ess = std::min(min_ess, r.ess);
      if (!r.rhat) continue;
      max_rhat = std::max(max_rhat, *r.rhat);
      if (!(*r.rhat <= cfg.rhat_threshold)) failing.push_back(r.name);
    }
  else
    failing.push_back("(R-hat needs at least 2 chains with 4 draws)");
  m["convergence"] = {{"rhat_threshold", cfg.rhat_threshold},
                      {"max_rhat", csv::format_double(max_rhat)},
                      {"min_ess", std::isfinite(min_ess) ? csv::format_double(min_ess) : "NA"},
                      {"not_converged", failing}};
  write_manifest(m, dir, "manifest.json", files);
  log << "max R-hat " << csv::format_double(max_rhat) << ", min ESS "
      << (std::isfinite(min_ess) ? csv::format_double(min_ess) : "NA") << "; outputs in " << dir.string() << "\n";
  if (!failing.empty()) {
    log << "not converged (R-hat > " << cfg.rhat_threshold << "): " << failing.size() << " parameter(s), first "
        << failing.front() << "\n";
    if (opts.strict) return kNotConverged;
  }
  return kOk;
}

int cmd_waic(const CommandOptions& opts, std::ostream& log) {
  Loaded L = load_fit(opts);
  Model model(L.in.panel, L.in.covariates, L.cfg.variant);
  fs::create_directories(L.out_dir);
  std::optional<WaicReport> stored, recomputed;
  if (L.draws.has_cell_loglik()) stored = waic(L.draws);
  if (L.draws.has_phi()) recomputed = waic(L.draws, model);
  if (!stored && !recomputed)
    throw ValidationError("WAIC needs stored per-cell log-likelihoods or phi draws (output.store_cell_loglik / store_phi)");
  const WaicReport& w = recomputed ? *recomputed : *stored;
  write_waic(w, L.in.panel, L.out_dir / "waic_recomputed.csv", L.out_dir / "waic_recomputed_cells.csv");
  json m = base_manifest("waic", L.cfg);
  m["data_sha256"] = data_hashes(L.cfg);
  m["waic"] = {{"waic", csv::format_double(w.waic)}, {"method", recomputed ? "forward_filter" : "stored_cell_loglik"}};
  log << "WAIC " << csv::format_double(w.waic) << " (lpdd " << csv::format_double(w.lpdd) << ", pwaic "
      << csv::format_double(w.pwaic) << ", " << w.draws << " draws)\n";
  if (stored && recomputed) {
    const double diff = std::abs(stored->waic - recomputed->waic);
    m["waic"]["stored_minus_recomputed"] = csv::format_double(stored->waic - recomputed->waic);
    log << "stored and recomputed WAIC differ by " << csv::format_double(diff) << "\n";
    if (!(diff <= 1e-10 * std::max(1.0, std::abs(stored->waic))))
      throw NumericalError("stored and recomputed WAIC disagree by " + csv::format_double(diff));
  }
  write_manifest(m, L.out_dir, "manifest_waic.json", {"waic_recomputed.csv", "waic_recomputed_cells.csv"});
  return kOk;
}

int cmd_summarize(const CommandOptions& opts, std::ostream& log) {
  Loaded L = load_fit(opts);
  Model model(L.in.panel, L.in.covariates, L.cfg.variant);
  fs::create_directories(L.out_dir);
  auto files = write_summaries(L.cfg, model, L.draws, L.out_dir, log);
  json m = base_manifest("summarize", L.cfg);
  m["data_sha256"] = data_hashes(L.cfg);
  write_manifest(m, L.out_dir, "manifest_summarize.json", files);
  log << "wrote " << files.size() << " summary file(s) to " << L.out_dir.string() << "\n";
  return kOk;
}

int run_command(const std::string& name, const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(opts, log);
    if (name == "fit") return cmd_fit(opts, log);
    if (name == "waic") return cmd_waic(opts, log);
    if (name == "summarize") return cmd_summarize(opts, log);
    throw ValidationError("unknown command '" + name + "' (expected simulate, fit, waic or summarize)");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace msz
