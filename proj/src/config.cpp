#include "msziarmn/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msziarmn/errors.hpp"

namespace msz {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ValidationError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ValidationError(join(path, it.key()) + ": unknown key");
  }
}

template <class T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    if constexpr (std::is_same_v<T, std::string>) throw ValidationError(path + ": expected a string");
    else if constexpr (std::is_same_v<T, bool>) throw ValidationError(path + ": expected true or false");
    else if constexpr (std::is_arithmetic_v<T>) throw ValidationError(path + ": expected a number");
    else throw ValidationError(path + ": wrong type");
  }
}

template <class T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (j.contains(key)) {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      const auto& v = j.at(key);
      if (!v.is_number_integer()) throw ValidationError(join(path, key) + ": expected an integer");
      if (v.is_number_unsigned()) out = static_cast<T>(v.get<std::uint64_t>());
      else {
        const auto s = v.get<std::int64_t>();
        if (s < 0 && std::is_unsigned_v<T>) throw ValidationError(join(path, key) + ": must be non-negative");
        out = static_cast<T>(s);
      }
    } else {
      out = as<T>(j.at(key), join(path, key));
    }
  }
}

std::vector<double> number_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as<double>(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::map<std::string, double> number_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object of numbers");
  std::map<std::string, double> m;
  for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = as<double>(it.value(), join(path, it.key()));
  return m;
}

Eigen::MatrixXd matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ValidationError(path + ": expected a square array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    auto row = number_array(j[r], path + "[" + std::to_string(r) + "]");
    if (static_cast<Eigen::Index>(row.size()) != n) throw ValidationError(path + ": matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) M(r, c) = row[c];
  }
  return M;
}

CovariateDecl covariate(const json& j, const std::string& path) {
  allow(j, path, {"name", "source", "disease", "column", "standardize"});
  CovariateDecl c;
  if (!j.contains("name")) throw ValidationError(path + ".name: required");
  read(j, path, "name", c.name);
  std::string source = "external";
  read(j, path, "source", source);
  if (source == "external") c.source = CovariateDecl::Source::External;
  else if (source == "neighbor_prevalence") c.source = CovariateDecl::Source::NeighborPrevalence;
  else if (source == "lagged_log_counts") c.source = CovariateDecl::Source::LaggedLogCounts;
  else if (source == "cumulative_incidence_diff") c.source = CovariateDecl::Source::CumulativeIncidenceDiff;
  else
    throw ValidationError(path + ".source: '" + source +
                          "' (expected external, neighbor_prevalence, lagged_log_counts or cumulative_incidence_diff)");
  read(j, path, "disease", c.disease);
  read(j, path, "column", c.column);
  read(j, path, "standardize", c.standardize);
  if (c.source == CovariateDecl::Source::External) {
    if (!c.disease.empty()) throw ValidationError(path + ".disease: only builders take a disease");
    if (c.column.empty()) c.column = c.name;
  } else {
    if (c.disease.empty()) throw ValidationError(path + ".disease: required by the '" + source + "' builder");
    if (!c.column.empty()) throw ValidationError(path + ".column: only external covariates take a column");
  }
  return c;
}

Transform transform(const std::string& s, const std::string& path) {
  if (s == "identity") return Transform::Identity;
  if (s == "exp") return Transform::Exp;
  if (s == "logistic") return Transform::Logistic;
  throw ValidationError(path + ": '" + s + "' (expected identity, exp or logistic)");
}

void parse_priors(const json& j, PriorSpec& p) {
  const std::string path = "priors";
  allow(j, path,
        {"intercept_mean", "intercept_sd", "alpha_mean", "alpha_sd", "eta0_mean", "eta0_sd", "eta_mean", "eta_sd",
         "rho_mean", "rho_sd", "sigma_scale", "iw_df", "iw_scale"});
  read(j, path, "intercept_mean", p.intercept_mean);
  read(j, path, "intercept_sd", p.intercept_sd);
  read(j, path, "alpha_mean", p.alpha_mean);
  read(j, path, "alpha_sd", p.alpha_sd);
  read(j, path, "eta0_mean", p.eta0_mean);
  read(j, path, "eta0_sd", p.eta0_sd);
  read(j, path, "eta_mean", p.eta_mean);
  read(j, path, "eta_sd", p.eta_sd);
  read(j, path, "rho_mean", p.rho_mean);
  read(j, path, "rho_sd", p.rho_sd);
  read(j, path, "sigma_scale", p.sigma_scale);
  read(j, path, "iw_df", p.iw_df);
  if (j.contains("iw_scale")) p.iw_scale = matrix(j["iw_scale"], "priors.iw_scale");
}

void parse_mcmc(const json& j, GibbsConfig& g) {
  const std::string path = "mcmc";
  allow(j, path, {"chains", "iterations", "burn_in", "thin", "seed", "threads", "adapt_interval", "init_inflation"});
  read(j, path, "chains", g.chains);
  read(j, path, "iterations", g.iterations);
  read(j, path, "burn_in", g.burn_in);
  read(j, path, "thin", g.thin);
  read(j, path, "seed", g.seed);
  read(j, path, "threads", g.threads);
  read(j, path, "adapt_interval", g.adapt_interval);
  read(j, path, "init_inflation", g.init_inflation);
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("mcmc: ") + e.what());
  }
}

void parse_summary(const json& j, SummaryOptions& s) {
  const std::string path = "summary";
  allow(j, path, {"transforms", "lambda_bar", "fitted", "response_curves"});
  if (j.contains("transforms")) {
    const auto& t = j["transforms"];
    if (!t.is_object()) throw ValidationError("summary.transforms: expected an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      s.transforms[it.key()] = transform(as<std::string>(it.value(), "summary.transforms." + it.key()),
                                         "summary.transforms." + it.key());
  }
  read(j, path, "lambda_bar", s.lambda_bar);
  read(j, path, "fitted", s.fitted);
  if (j.contains("response_curves")) {
    const auto& a = j["response_curves"];
    if (!a.is_array()) throw ValidationError("summary.response_curves: expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p = "summary.response_curves[" + std::to_string(i) + "]";
      allow(a[i], p, {"disease", "covariate", "from", "to", "points", "threshold"});
      ResponseCurveSpec r;
      for (const char* k : {"disease", "covariate", "from", "to"})
        if (!a[i].contains(k)) throw ValidationError(p + "." + k + ": required");
      read(a[i], p, "disease", r.disease);
      read(a[i], p, "covariate", r.covariate);
      read(a[i], p, "from", r.from);
      read(a[i], p, "to", r.to);
      read(a[i], p, "points", r.points);
      read(a[i], p, "threshold", r.threshold);
      if (r.points < 2 || !(r.to > r.from)) throw ValidationError(p + ": need from < to and at least 2 points");
      s.response_curves.push_back(r);
    }
  }
}

SimulateSpec parse_simulate(const json& j) {
  const std::string path = "simulate";
  allow(j, path, {"N", "T", "totals", "population", "generate", "truth"});
  SimulateSpec s;
  if (!j.contains("N") || !j.contains("T")) throw ValidationError("simulate: N and T are required");
  read(j, path, "N", s.N);
  read(j, path, "T", s.T);
  if (j.contains("totals")) {
    allow(j["totals"], "simulate.totals", {"mean", "size"});
    read(j["totals"], "simulate.totals", "mean", s.total_mean);
    read(j["totals"], "simulate.totals", "size", s.total_size);
  }
  read(j, path, "population", s.population);
  if (!(s.population > 0.0)) throw ValidationError("simulate.population: must be positive");
  if (j.contains("generate")) {
    const auto& g = j["generate"];
    if (!g.is_object()) throw ValidationError("simulate.generate: expected an object");
    for (auto it = g.begin(); it != g.end(); ++it) {
      const std::string p = "simulate.generate." + it.key();
      allow(it.value(), p, {"kind", "period", "noise"});
      GeneratedCovariate c;
      read(it.value(), p, "kind", c.kind);
      read(it.value(), p, "period", c.period);
      read(it.value(), p, "noise", c.noise);
      if (c.kind != "normal" && c.kind != "seasonal") throw ValidationError(p + ".kind: expected normal or seasonal");
      if (!(c.period > 0.0)) throw ValidationError(p + ".period: must be positive");
      s.generate[it.key()] = c;
    }
  }
  if (!j.contains("truth")) throw ValidationError("simulate.truth: required");
  const auto& t = j["truth"];
  const std::string tp = "simulate.truth";
  allow(t, tp, {"zeta", "alpha0", "sigma", "alpha", "Sigma", "eta0", "eta", "rho_ar", "rho_di", "initial_presence"});
  for (const char* k : {"zeta", "alpha0", "sigma", "Sigma"})
    if (!t.contains(k)) throw ValidationError(tp + "." + k + ": required");
  auto& tr = s.truth;
  tr.zeta = number_array(t["zeta"], tp + ".zeta");
  tr.alpha0 = number_array(t["alpha0"], tp + ".alpha0");
  tr.sigma = number_array(t["sigma"], tp + ".sigma");
  tr.Sigma = matrix(t["Sigma"], tp + ".Sigma");
  if (t.contains("alpha")) tr.alpha = number_map(t["alpha"], tp + ".alpha");
  if (t.contains("eta0")) tr.eta0 = number_array(t["eta0"], tp + ".eta0");
  if (t.contains("eta")) tr.eta = number_map(t["eta"], tp + ".eta");
  if (t.contains("rho_ar")) tr.rho_ar = number_array(t["rho_ar"], tp + ".rho_ar");
  if (t.contains("rho_di")) tr.rho_di = number_map(t["rho_di"], tp + ".rho_di");
  if (t.contains("initial_presence")) tr.initial_presence = number_array(t["initial_presence"], tp + ".initial_presence");
  return s;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const fs::path& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(source.string() + ": " + line_column(text, e.byte) + ": malformed JSON");
  }
  RunConfig c;
  c.source = source;
  c.text = text;
  try {
    allow(j, "", {"schema_version", "data", "variant", "covariates", "sharing", "initial_presence", "priors", "mcmc",
                  "diagnostics", "output", "summary", "simulate"});
    if (!j.contains("schema_version")) throw ValidationError("schema_version: required");
    int version = 0;
    read(j, "", "schema_version", version);
    if (version != kSchemaVersion)
      throw ValidationError("schema_version: unsupported version " + std::to_string(version) + " (expected " +
                            std::to_string(kSchemaVersion) + ")");
    const fs::path base = source.has_parent_path() ? source.parent_path() : fs::path(".");
    auto resolve = [&](const std::string& p) { return p.empty() ? fs::path() : base / p; };

    if (j.contains("data")) {
      const auto& d = j["data"];
      allow(d, "data", {"counts", "adjacency", "population", "covariates", "diseases"});
      std::string s;
      s.clear(), read(d, "data", "counts", s), c.counts = resolve(s);
      s.clear(), read(d, "data", "adjacency", s), c.adjacency = resolve(s);
      s.clear(), read(d, "data", "population", s), c.population = resolve(s);
      s.clear(), read(d, "data", "covariates", s), c.covariates = resolve(s);
      if (d.contains("diseases")) {
        if (!d["diseases"].is_array()) throw ValidationError("data.diseases: expected an array of names");
        for (std::size_t i = 0; i < d["diseases"].size(); ++i)
          c.diseases.push_back(as<std::string>(d["diseases"][i], "data.diseases[" + std::to_string(i) + "]"));
      }
    }
    if (j.contains("variant")) {
      try {
        c.variant = parse_variant(as<std::string>(j["variant"], "variant"));
      } catch (const ValidationError& e) {
        throw ValidationError(std::string("variant: ") + e.what());
      }
    }
    if (j.contains("covariates")) {
      const auto& cv = j["covariates"];
      if (!cv.is_object()) throw ValidationError("covariates: expected an object keyed by disease");
      for (auto it = cv.begin(); it != cv.end(); ++it) {
        const std::string p = "covariates." + it.key();
        allow(it.value(), p, {"x", "z"});
        DiseaseCovariates dc;
        for (const char* role : {"x", "z"}) {
          if (!it.value().contains(role)) continue;
          const auto& a = it.value()[role];
          if (!a.is_array()) throw ValidationError(p + "." + role + ": expected an array");
          auto& out = std::string(role) == "x" ? dc.x : dc.z;
          for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(covariate(a[i], p + "." + role + "[" + std::to_string(i) + "]"));
        }
        c.disease_covariates[it.key()] = dc;
      }
    }
    if (j.contains("sharing")) {
      const auto& a = j["sharing"];
      if (!a.is_array()) throw ValidationError("sharing: expected an array");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string p = "sharing[" + std::to_string(i) + "]";
        allow(a[i], p, {"name", "members"});
        SharingDecl s;
        read(a[i], p, "name", s.name);
        if (!a[i].contains("members") || !a[i]["members"].is_array())
          throw ValidationError(p + ".members: expected an array of {disease, covariate}");
        for (std::size_t m = 0; m < a[i]["members"].size(); ++m) {
          const auto& e = a[i]["members"][m];
          const std::string mp = p + ".members[" + std::to_string(m) + "]";
          allow(e, mp, {"disease", "covariate"});
          std::string dn, cn;
          read(e, mp, "disease", dn);
          read(e, mp, "covariate", cn);
          s.members.emplace_back(dn, cn);
        }
        c.sharing.push_back(s);
      }
    }
    if (j.contains("initial_presence")) {
      c.initial_presence = number_map(j["initial_presence"], "initial_presence");
      for (auto& [k, v] : c.initial_presence)
        if (!(v > 0.0 && v < 1.0)) throw ValidationError("initial_presence." + k + ": must lie in (0, 1)");
    }
    if (j.contains("priors")) parse_priors(j["priors"], c.prior);
    if (j.contains("mcmc")) parse_mcmc(j["mcmc"], c.mcmc);
    if (j.contains("diagnostics")) {
      allow(j["diagnostics"], "diagnostics", {"rhat_threshold"});
      read(j["diagnostics"], "diagnostics", "rhat_threshold", c.rhat_threshold);
    }
    if (j.contains("output")) {
      const auto& o = j["output"];
      allow(o, "output", {"dir", "store_phi", "store_states", "store_cell_loglik"});
      std::string dir;
      read(o, "output", "dir", dir);
      if (!dir.empty()) c.output_dir = dir;
      read(o, "output", "store_phi", c.mcmc.store_phi);
      read(o, "output", "store_states", c.mcmc.store_states);
      read(o, "output", "store_cell_loglik", c.mcmc.store_cell_loglik);
    }
    if (c.output_dir.is_relative()) c.output_dir = base / c.output_dir;
    if (j.contains("summary")) parse_summary(j["summary"], c.summary);
    if (j.contains("simulate")) c.simulate = parse_simulate(j["simulate"]);
  } catch (const ValidationError& e) {
    throw ValidationError(source.string() + ": " + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open configuration " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), file);
}

bool RunConfig::needs_area_metadata() const {
  for (const auto& [d, dc] : disease_covariates)
    for (const auto* v : {&dc.x, &dc.z})
      for (const auto& c : *v)
        if (c.source == CovariateDecl::Source::NeighborPrevalence ||
            c.source == CovariateDecl::Source::CumulativeIncidenceDiff)
          return true;
  return false;
}

void RunConfig::check_files() const {
  auto need = [&](const fs::path& p, const char* key) {
    if (p.empty()) throw ValidationError(source.string() + ": data." + key + ": required");
    if (!fs::exists(p)) throw ValidationError(source.string() + ": data." + key + ": file not found: " + p.string());
  };
  need(counts, "counts");
  bool external = false;
  for (const auto& [d, dc] : disease_covariates)
    for (const auto* v : {&dc.x, &dc.z})
      for (const auto& c : *v) external = external || c.source == CovariateDecl::Source::External;
  if (external) need(covariates, "covariates");
  else if (!covariates.empty()) need(covariates, "covariates");
  if (needs_area_metadata()) {
    need(adjacency, "adjacency");
    need(population, "population");
  } else {
    if (!adjacency.empty()) need(adjacency, "adjacency");
    if (!population.empty()) need(population, "population");
  }
}

std::vector<double> RunConfig::presence_vector(const std::vector<std::string>& disease_names) const {
  std::vector<double> q;
  for (std::size_t d = 1; d < disease_names.size(); ++d) {
    auto it = initial_presence.find(disease_names[d]);
    q.push_back(it == initial_presence.end() ? 0.5 : it->second);
  }
  for (const auto& [k, v] : initial_presence)
    if (std::find(disease_names.begin() + 1, disease_names.end(), k) == disease_names.end())
      throw ValidationError("initial_presence." + k + ": not a non-baseline disease of the panel");
  return q;
}

CovariateBundle build_covariates(const RunConfig& cfg, const DiseasePanel& panel, const AreaMetadata* meta,
                                 const std::vector<CovariateSeries>& external) {
  const auto& names = panel.disease_names();
  const int D = panel.diseases() - 1;
  for (const auto& [k, v] : cfg.disease_covariates)
    if (std::find(names.begin() + 1, names.end(), k) == names.end())
      throw ValidationError("covariates." + k + ": not a non-baseline disease of the panel");

  auto disease_of = [&](const std::string& n, const std::string& where) {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) throw ValidationError(where + ": unknown disease '" + n + "'");
    return static_cast<int>(it - names.begin());
  };
  std::vector<Standardization> records;
  auto build = [&](const CovariateDecl& c, const std::string& where) {
    CovariateSeries s;
    switch (c.source) {
      case CovariateDecl::Source::External: {
        auto it = std::find_if(external.begin(), external.end(), [&](const auto& e) { return e.name == c.column; });
        if (it == external.end()) throw ValidationError(where + ": no covariate '" + c.column + "' in the covariate file");
        s = *it;
        break;
      }
      case CovariateDecl::Source::NeighborPrevalence:
        if (!meta) throw ValidationError(where + ": neighbor_prevalence needs adjacency and population files");
        s = neighbor_prevalence(panel, *meta, disease_of(c.disease, where));
        break;
      case CovariateDecl::Source::LaggedLogCounts:
        s = lagged_log_counts(panel, disease_of(c.disease, where));
        break;
      case CovariateDecl::Source::CumulativeIncidenceDiff:
        if (!meta) throw ValidationError(where + ": cumulative_incidence_diff needs adjacency and population files");
        s = cumulative_incidence_diff(panel, *meta, disease_of(c.disease, where));
        break;
    }
    s.name = c.name;
    if (c.standardize) {
      auto st = standardize(s);
      st.record.name = c.name;
      if (std::none_of(records.begin(), records.end(), [&](const auto& r) { return r.name == c.name; }))
        records.push_back(st.record);
      s = st.series;
    }
    return s;
  };
  std::vector<std::vector<CovariateSeries>> x(D), z(D);
  for (int d = 0; d < D; ++d) {
    auto it = cfg.disease_covariates.find(names[d + 1]);
    if (it == cfg.disease_covariates.end()) continue;
    const std::string p = "covariates." + names[d + 1];
    for (std::size_t j = 0; j < it->second.x.size(); ++j)
      x[d].push_back(build(it->second.x[j], p + ".x[" + std::to_string(j) + "]"));
    for (std::size_t j = 0; j < it->second.z.size(); ++j)
      z[d].push_back(build(it->second.z[j], p + ".z[" + std::to_string(j) + "]"));
  }
  std::vector<SharingGroup> groups;
  for (const auto& s : cfg.sharing) {
    SharingGroup g;
    g.name = s.name;
    for (const auto& [dn, cn] : s.members) {
      const int k = disease_of(dn, "sharing '" + s.name + "'");
      if (k == 0) throw ValidationError("sharing '" + s.name + "': the baseline has no coefficients");
      const auto& xs = x[k - 1];
      auto it = std::find_if(xs.begin(), xs.end(), [&](const auto& c) { return c.name == cn; });
      if (it == xs.end())
        throw ValidationError("sharing '" + s.name + "': disease '" + dn + "' has no x covariate '" + cn + "'");
      g.slots.push_back({k - 1, static_cast<int>(it - xs.begin())});
    }
    groups.push_back(g);
  }
  std::vector<std::string> nb(names.begin() + 1, names.end());
  return CovariateBundle(nb, panel.areas(), panel.times(), x, z, groups, records);
}

FitInputs load_inputs(const RunConfig& cfg) {
  cfg.check_files();
  FitInputs in;
  in.panel = load_panel(cfg.counts, cfg.diseases);
  if (!cfg.adjacency.empty() && !cfg.population.empty())
    in.meta = load_area_metadata(in.panel, cfg.adjacency, cfg.population);
  std::vector<CovariateSeries> external;
  if (!cfg.covariates.empty()) external = load_covariates(in.panel, cfg.covariates);
  in.covariates = build_covariates(cfg, in.panel, in.meta ? &*in.meta : nullptr, external);
  return in;
}

}  // namespace msz
