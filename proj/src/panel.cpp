#include "msziarmn/panel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "msziarmn/csv.hpp"
#include "msziarmn/errors.hpp"

namespace msz {

DiseasePanel::DiseasePanel(std::vector<std::string> disease_names, std::vector<std::string> area_labels,
                           std::vector<long long> time_labels, std::vector<std::int64_t> counts)
    : K_(static_cast<int>(disease_names.size())),
      N_(static_cast<int>(area_labels.size())),
      T_(static_cast<int>(time_labels.size())),
      disease_names_(std::move(disease_names)),
      area_labels_(std::move(area_labels)),
      time_labels_(std::move(time_labels)),
      counts_(std::move(counts)) {
  if (K_ < 2) throw ValidationError("panel needs at least 2 diseases, got " + std::to_string(K_));
  if (N_ < 1) throw ValidationError("panel needs at least 1 area");
  if (T_ < 2) throw ValidationError("panel needs at least 2 times, got " + std::to_string(T_));
  if (counts_.size() != static_cast<std::size_t>(K_) * N_ * T_)
    throw ValidationError("count tensor has " + std::to_string(counts_.size()) + " cells, expected K*N*T = " +
                          std::to_string(static_cast<std::size_t>(K_) * N_ * T_));
  totals_.assign(static_cast<std::size_t>(N_) * T_, 0);
  for (int k = 0; k < K_; ++k)
    for (int i = 0; i < N_; ++i)
      for (int t = 0; t < T_; ++t) {
        auto y = count(k, i, t);
        if (y < 0)
          throw ValidationError("negative count at (k=" + std::to_string(k + 1) + ",i=" + std::to_string(i + 1) +
                                ",t=" + std::to_string(t + 1) + ")");
        totals_[static_cast<std::size_t>(i) * T_ + t] += y;
      }
}

int DiseasePanel::disease_index(const std::string& name) const {
  auto it = std::find(disease_names_.begin(), disease_names_.end(), name);
  if (it == disease_names_.end()) throw ValidationError("unknown disease '" + name + "'");
  return static_cast<int>(it - disease_names_.begin());
}

int DiseasePanel::area_index(const std::string& label) const {
  auto it = std::find(area_labels_.begin(), area_labels_.end(), label);
  if (it == area_labels_.end()) throw ValidationError("unknown area '" + label + "'");
  return static_cast<int>(it - area_labels_.begin());
}

double AreaMetadata::neighbor_weight(int i) const {
  double s = 0.0;
  for (int j : neighbors.at(i)) s += population.at(j);
  return 1.0 / s;
}

void AreaMetadata::validate() const {
  const int n = areas();
  if (static_cast<int>(neighbors.size()) != n)
    throw ValidationError("adjacency covers " + std::to_string(neighbors.size()) + " areas, population covers " +
                          std::to_string(n));
  for (int i = 0; i < n; ++i) {
    if (!(population[i] > 0.0))
      throw ValidationError("population of area " + std::to_string(i + 1) + " must be strictly positive");
    for (int j : neighbors[i]) {
      if (j < 0 || j >= n) throw ValidationError("neighbor index out of range for area " + std::to_string(i + 1));
      if (j == i) throw ValidationError("area " + std::to_string(i + 1) + " lists itself as a neighbor");
      const auto& back = neighbors[j];
      if (std::find(back.begin(), back.end(), i) == back.end())
        throw ValidationError("adjacency is not symmetric between areas " + std::to_string(i + 1) + " and " +
                              std::to_string(j + 1));
    }
  }
}

DiseasePanel load_panel(const std::filesystem::path& counts_file, const std::vector<std::string>& disease_order) {
  auto table = csv::read(counts_file);
  const auto cd = table.column("disease"), ca = table.column("area"), ct = table.column("time"),
             cc = table.column("count");

  std::vector<std::string> diseases = disease_order;
  std::vector<std::string> areas;
  std::unordered_map<std::string, int> disease_ix, area_ix;
  for (std::size_t k = 0; k < diseases.size(); ++k) disease_ix[diseases[k]] = static_cast<int>(k);
  std::set<long long> time_set;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (!disease_ix.count(row[cd])) {
      if (!disease_order.empty())
        throw ValidationError(table.source + ":" + std::to_string(table.line_numbers[r]) + ": disease '" + row[cd] +
                              "' is not among the declared diseases");
      disease_ix[row[cd]] = static_cast<int>(diseases.size());
      diseases.push_back(row[cd]);
    }
    if (!area_ix.count(row[ca])) {
      area_ix[row[ca]] = static_cast<int>(areas.size());
      areas.push_back(row[ca]);
    }
    time_set.insert(csv::to_integer(table, r, ct));
  }
  std::vector<long long> times(time_set.begin(), time_set.end());
  std::map<long long, int> time_ix;
  for (std::size_t t = 0; t < times.size(); ++t) time_ix[times[t]] = static_cast<int>(t);

  const std::size_t K = diseases.size(), N = areas.size(), T = times.size();
  if (K < 2) throw ValidationError(table.source + ": need at least 2 diseases");
  if (T < 2) throw ValidationError(table.source + ": need at least 2 time points");
  std::vector<std::int64_t> counts(K * N * T, -1);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int k = disease_ix[row[cd]], i = area_ix[row[ca]], t = time_ix[csv::to_integer(table, r, ct)];
    const long long y = csv::to_integer(table, r, cc);
    const std::string coord = "(" + std::to_string(k + 1) + "," + std::to_string(i + 1) + "," + std::to_string(t + 1) + ")";
    if (y < 0)
      throw ValidationError(table.source + ":" + std::to_string(table.line_numbers[r]) + ": negative count at " + coord);
    auto& cell = counts[(k * N + i) * T + t];
    if (cell != -1)
      throw ValidationError(table.source + ":" + std::to_string(table.line_numbers[r]) + ": duplicate cell " + coord);
    cell = y;
  }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t t = 0; t < T; ++t)
        if (counts[(k * N + i) * T + t] < 0)
          throw ValidationError(table.source + ": missing cell (" + std::to_string(k + 1) + "," +
                                std::to_string(i + 1) + "," + std::to_string(t + 1) + ") [disease=" + diseases[k] +
                                ", area=" + areas[i] + ", time=" + std::to_string(times[t]) + "]");
  return DiseasePanel(std::move(diseases), std::move(areas), std::move(times), std::move(counts));
}

void write_panel(const DiseasePanel& panel, const std::filesystem::path& counts_file) {
  std::ofstream out(counts_file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + counts_file.string());
  csv::write_row(out, {"disease", "area", "time", "count"});
  for (int k = 0; k < panel.diseases(); ++k)
    for (int i = 0; i < panel.areas(); ++i)
      for (int t = 0; t < panel.times(); ++t)
        csv::write_row(out, {panel.disease_names()[k], panel.area_labels()[i], std::to_string(panel.time_labels()[t]),
                             std::to_string(panel.count(k, i, t))});
}

AreaMetadata load_area_metadata(const DiseasePanel& panel, const std::filesystem::path& adjacency_file,
                                const std::filesystem::path& population_file) {
  AreaMetadata meta;
  const int n = panel.areas();
  meta.neighbors.assign(n, {});
  meta.population.assign(n, -1.0);

  auto pop = csv::read(population_file);
  const auto pa = pop.column("area"), pp = pop.column("pop");
  for (std::size_t r = 0; r < pop.rows.size(); ++r) {
    const int i = panel.area_index(pop.rows[r][pa]);
    if (meta.population[i] >= 0.0)
      throw ValidationError(pop.source + ":" + std::to_string(pop.line_numbers[r]) + ": duplicate population row");
    meta.population[i] = csv::to_double(pop, r, pp);
    if (!(meta.population[i] > 0.0))
      throw ValidationError(pop.source + ":" + std::to_string(pop.line_numbers[r]) + ": population must be positive");
  }
  for (int i = 0; i < n; ++i)
    if (meta.population[i] < 0.0)
      throw ValidationError(pop.source + ": no population for area '" + panel.area_labels()[i] + "'");

  auto adj = csv::read(adjacency_file);
  const auto ea = adj.column("area_a"), eb = adj.column("area_b");
  std::vector<std::set<int>> sets(n);
  for (std::size_t r = 0; r < adj.rows.size(); ++r) {
    const int a = panel.area_index(adj.rows[r][ea]), b = panel.area_index(adj.rows[r][eb]);
    if (a == b)
      throw ValidationError(adj.source + ":" + std::to_string(adj.line_numbers[r]) + ": self-edge on area '" +
                            adj.rows[r][ea] + "'");
    sets[a].insert(b);
    sets[b].insert(a);
  }
  for (int i = 0; i < n; ++i) meta.neighbors[i].assign(sets[i].begin(), sets[i].end());
  meta.validate();
  return meta;
}

void write_area_metadata(const DiseasePanel& panel, const AreaMetadata& meta,
                         const std::filesystem::path& adjacency_file, const std::filesystem::path& population_file) {
  std::ofstream adj(adjacency_file, std::ios::binary);
  if (!adj) throw ValidationError("cannot write " + adjacency_file.string());
  csv::write_row(adj, {"area_a", "area_b"});
  for (int i = 0; i < meta.areas(); ++i)
    for (int j : meta.neighbors[i])
      if (i < j) csv::write_row(adj, {panel.area_labels()[i], panel.area_labels()[j]});
  std::ofstream pop(population_file, std::ios::binary);
  if (!pop) throw ValidationError("cannot write " + population_file.string());
  csv::write_row(pop, {"area", "pop"});
  for (int i = 0; i < meta.areas(); ++i) csv::write_row(pop, {panel.area_labels()[i], csv::format_double(meta.population[i])});
}

}  // namespace msz
