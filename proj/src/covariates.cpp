#include "msziarmn/covariates.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "msziarmn/csv.hpp"
#include "msziarmn/errors.hpp"

namespace msz {

CovariateSeries::CovariateSeries(std::string n, int a, int t)
    : name(std::move(n)), areas(a), times(t), values(static_cast<std::size_t>(a) * t, 0.0) {}

CovariateSeries neighbor_prevalence(const DiseasePanel& panel, const AreaMetadata& meta, int k) {
  if (meta.areas() != panel.areas())
    throw ValidationError("area metadata covers " + std::to_string(meta.areas()) + " areas, panel has " +
                          std::to_string(panel.areas()));
  CovariateSeries out("neighbor_prevalence:" + panel.disease_names().at(k), panel.areas(), panel.times());
  for (int i = 0; i < panel.areas(); ++i) {
    if (meta.neighbors[i].empty())
      throw ValidationError("area '" + panel.area_labels()[i] +
                            "' has no neighbors; supply a self-inclusive adjacency or drop the neighbor-prevalence "
                            "covariate");
    double pop = 0.0;
    for (int j : meta.neighbors[i]) pop += meta.population[j];
    for (int t = 1; t < panel.times(); ++t) {
      double cases = 0.0;
      for (int j : meta.neighbors[i]) cases += static_cast<double>(panel.count(k, j, t - 1));
      out.at(i, t) = std::log1p(cases / pop);
    }
  }
  return out;
}

CovariateSeries lagged_log_counts(const DiseasePanel& panel, int k) {
  CovariateSeries out("lagged_log_counts:" + panel.disease_names().at(k), panel.areas(), panel.times());
  for (int i = 0; i < panel.areas(); ++i)
    for (int t = 1; t < panel.times(); ++t) out.at(i, t) = std::log1p(static_cast<double>(panel.count(k, i, t - 1)));
  return out;
}

CovariateSeries cumulative_incidence_diff(const DiseasePanel& panel, const AreaMetadata& meta, int k) {
  if (k == 0) throw ValidationError("cumulative incidence difference against baseline is identically zero");
  if (k < 0 || k >= panel.diseases()) throw ValidationError("disease index out of range");
  CovariateSeries out("cumulative_incidence_diff:" + panel.disease_names()[k], panel.areas(), panel.times());
  for (int i = 0; i < panel.areas(); ++i) {
    double diff = 0.0;
    for (int t = 1; t < panel.times(); ++t) {
      diff += static_cast<double>(panel.count(k, i, t - 1) - panel.count(0, i, t - 1));
      out.at(i, t) = diff / meta.population.at(i);
    }
  }
  return out;
}

StandardizedSeries standardize(const CovariateSeries& series) {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  for (int i = 0; i < series.areas; ++i)
    for (int t = 1; t < series.times; ++t) {
      const double v = series.at(i, t);
      n += 1.0;
      const double delta = v - mean;
      mean += delta / n;
      m2 += delta * (v - mean);
    }
  const double sd = n > 1.0 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw ValidationError("covariate '" + series.name + "' is constant over its support and cannot be standardized");
  StandardizedSeries out{CovariateSeries(series.name, series.areas, series.times), {series.name, mean, sd}};
  for (int i = 0; i < series.areas; ++i)
    for (int t = 1; t < series.times; ++t) out.series.at(i, t) = (series.at(i, t) - mean) / sd;
  return out;
}

namespace {

void check_series(const CovariateSeries& s, int N, int T, const std::string& role) {
  if (s.areas != N || s.times != T || s.values.size() != static_cast<std::size_t>(N) * T)
    throw ValidationError(role + " covariate '" + s.name + "' has the wrong shape");
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < N; ++i)
    for (int t = 1; t < T; ++t) {
      const double v = s.at(i, t);
      if (!std::isfinite(v))
        throw ValidationError(role + " covariate '" + s.name + "' is missing or non-finite at area " +
                              std::to_string(i + 1) + ", time " + std::to_string(t + 1));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) throw ValidationError(role + " covariate '" + s.name + "' has zero variance");
}

std::vector<double> pack(const std::vector<CovariateSeries>& cols, int N, int T) {
  const std::size_t p = cols.size();
  std::vector<double> out(static_cast<std::size_t>(N) * T * p, 0.0);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t)
      for (std::size_t j = 0; j < p; ++j) out[(static_cast<std::size_t>(i) * T + t) * p + j] = cols[j].at(i, t);
  return out;
}

}  // namespace

CovariateBundle::CovariateBundle(std::vector<std::string> disease_names, int areas, int times,
                                 std::vector<std::vector<CovariateSeries>> x,
                                 std::vector<std::vector<CovariateSeries>> z, std::vector<SharingGroup> sharing,
                                 std::vector<Standardization> records)
    : names_(std::move(disease_names)), N_(areas), T_(times), sharing_(std::move(sharing)), records_(std::move(records)) {
  const int D = non_baseline();
  if (D < 1) throw ValidationError("covariate bundle needs at least one non-baseline disease");
  if (static_cast<int>(x.size()) != D || static_cast<int>(z.size()) != D)
    throw ValidationError("covariate bundle must list x and z covariates for each of the " + std::to_string(D) +
                          " non-baseline diseases");
  x_names_.resize(D);
  z_names_.resize(D);
  for (int d = 0; d < D; ++d) {
    for (const auto& s : x[d]) {
      check_series(s, N_, T_, "multinomial");
      x_names_[d].push_back(s.name);
    }
    for (const auto& s : z[d]) {
      check_series(s, N_, T_, "presence");
      z_names_[d].push_back(s.name);
    }
    x_.push_back(pack(x[d], N_, T_));
    z_.push_back(pack(z[d], N_, T_));
  }

  alpha_map_.resize(D);
  for (int d = 0; d < D; ++d) alpha_map_[d].assign(x_count(d), -1);
  for (const auto& g : sharing_) {
    if (g.slots.size() < 2) throw ValidationError("sharing group '" + g.name + "' must tie at least two slots");
    const int idx = static_cast<int>(free_names_.size());
    for (const auto& s : g.slots) {
      if (s.disease < 0 || s.disease >= D || s.covariate < 0 || s.covariate >= x_count(s.disease))
        throw ValidationError("sharing group '" + g.name + "' references a non-existent (disease, covariate) slot");
      if (alpha_map_[s.disease][s.covariate] != -1)
        throw ValidationError("slot " + names_[s.disease] + ":" + x_names_[s.disease][s.covariate] +
                              " appears in more than one sharing group");
      alpha_map_[s.disease][s.covariate] = idx;
    }
    free_names_.push_back(g.name.empty() ? "shared:" + x_names_[g.slots[0].disease][g.slots[0].covariate] : g.name);
  }
  for (int d = 0; d < D; ++d)
    for (int j = 0; j < x_count(d); ++j)
      if (alpha_map_[d][j] == -1) {
        alpha_map_[d][j] = static_cast<int>(free_names_.size());
        free_names_.push_back(names_[d] + ":" + x_names_[d][j]);
      }
}

CovariateBundle CovariateBundle::empty(const DiseasePanel& panel) {
  const int D = panel.diseases() - 1;
  std::vector<std::string> names(panel.disease_names().begin() + 1, panel.disease_names().end());
  return CovariateBundle(std::move(names), panel.areas(), panel.times(), std::vector<std::vector<CovariateSeries>>(D),
                         std::vector<std::vector<CovariateSeries>>(D));
}

std::vector<double> CovariateBundle::expand_alpha(int d, std::span<const double> free) const {
  if (static_cast<int>(free.size()) != free_alpha_count())
    throw ValidationError("expected " + std::to_string(free_alpha_count()) + " free coefficients, got " +
                          std::to_string(free.size()));
  std::vector<double> out(x_count(d));
  for (int j = 0; j < x_count(d); ++j) out[j] = free[alpha_map_[d][j]];
  return out;
}

std::vector<CovariateSeries> load_covariates(const DiseasePanel& panel, const std::filesystem::path& file) {
  auto table = csv::read(file);
  const auto cn = table.column("name"), ca = table.column("area"), ct = table.column("time"), cv = table.column("value");
  std::map<long long, int> time_ix;
  for (int t = 0; t < panel.times(); ++t) time_ix[panel.time_labels()[t]] = t;
  std::map<std::string, std::size_t> by_name;
  std::vector<CovariateSeries> out;
  std::vector<std::vector<char>> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& name = table.rows[r][cn];
    if (!by_name.count(name)) {
      by_name[name] = out.size();
      out.emplace_back(name, panel.areas(), panel.times());
      seen.emplace_back(static_cast<std::size_t>(panel.areas()) * panel.times(), 0);
    }
    const auto s = by_name[name];
    const int i = panel.area_index(table.rows[r][ca]);
    const auto tl = csv::to_integer(table, r, ct);
    auto it = time_ix.find(tl);
    if (it == time_ix.end())
      throw ValidationError(table.source + ":" + std::to_string(table.line_numbers[r]) + ": time " +
                            std::to_string(tl) + " is not in the panel");
    const int t = it->second;
    auto& flag = seen[s][static_cast<std::size_t>(i) * panel.times() + t];
    if (flag)
      throw ValidationError(table.source + ":" + std::to_string(table.line_numbers[r]) + ": duplicate value for '" +
                            name + "'");
    flag = 1;
    out[s].at(i, t) = csv::to_double(table, r, cv);
  }
  for (std::size_t s = 0; s < out.size(); ++s)
    for (int i = 0; i < panel.areas(); ++i)
      for (int t = 1; t < panel.times(); ++t)
        if (!seen[s][static_cast<std::size_t>(i) * panel.times() + t])
          throw ValidationError(table.source + ": covariate '" + out[s].name + "' missing at area '" +
                                panel.area_labels()[i] + "', time " + std::to_string(panel.time_labels()[t]));
  return out;
}

void write_covariates(const DiseasePanel& panel, const std::vector<CovariateSeries>& series,
                      const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file.string());
  csv::write_row(out, {"name", "area", "time", "value"});
  for (const auto& s : series)
    for (int i = 0; i < s.areas; ++i)
      for (int t = 0; t < s.times; ++t)
        csv::write_row(out, {s.name, panel.area_labels()[i], std::to_string(panel.time_labels()[t]),
                             csv::format_double(s.at(i, t))});
}

}  // namespace msz
