#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace msz {

/// Observed counts y[k][i][t] for K diseases, N areas and T times.
///
/// Disease 0 is the baseline (always present). Areas and times are dense
/// 0-based indices; the original labels are kept for writing files back out.
/// The object is immutable after construction and validated on entry.
class DiseasePanel {
 public:
  DiseasePanel() = default;

  /// `counts` is laid out disease-major: counts[(k * N + i) * T + t].
  DiseasePanel(std::vector<std::string> disease_names, std::vector<std::string> area_labels,
               std::vector<long long> time_labels, std::vector<std::int64_t> counts);

  int diseases() const { return K_; }
  int areas() const { return N_; }
  int times() const { return T_; }

  std::int64_t count(int k, int i, int t) const { return counts_[(static_cast<std::size_t>(k) * N_ + i) * T_ + t]; }
  std::int64_t total(int i, int t) const { return totals_[static_cast<std::size_t>(i) * T_ + t]; }

  const std::vector<std::string>& disease_names() const { return disease_names_; }
  const std::vector<std::string>& area_labels() const { return area_labels_; }
  const std::vector<long long>& time_labels() const { return time_labels_; }
  std::span<const std::int64_t> raw_counts() const { return counts_; }

  int disease_index(const std::string& name) const;
  int area_index(const std::string& label) const;

 private:
  int K_ = 0, N_ = 0, T_ = 0;
  std::vector<std::string> disease_names_;
  std::vector<std::string> area_labels_;
  std::vector<long long> time_labels_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> totals_;
};

/// Neighbourhood structure and populations over the panel's areas.
struct AreaMetadata {
  std::vector<std::vector<int>> neighbors;
  std::vector<double> population;

  int areas() const { return static_cast<int>(population.size()); }

  /// Spatial-spread weight of any neighbour j on area i: 1 / sum_{m in NE(i)} pop_m.
  double neighbor_weight(int i) const;

  /// Throws ValidationError if adjacency is not symmetric and irreflexive,
  /// or a population is not strictly positive.
  void validate() const;
};

/// Reads a long-format counts file (disease,area,time,count).
///
/// `disease_order` fixes the disease indexing (first entry = baseline); when
/// empty, diseases are indexed in order of first appearance. Areas follow
/// first appearance; times are sorted ascending.
DiseasePanel load_panel(const std::filesystem::path& counts_file,
                        const std::vector<std::string>& disease_order = {});

/// Writes the panel in the same long format, rows sorted by (disease, area, time) index.
void write_panel(const DiseasePanel& panel, const std::filesystem::path& counts_file);

/// Reads an edge list (area_a,area_b) and a population table (area,pop),
/// mapping labels through the panel. Edges are symmetrised.
AreaMetadata load_area_metadata(const DiseasePanel& panel, const std::filesystem::path& adjacency_file,
                                const std::filesystem::path& population_file);

void write_area_metadata(const DiseasePanel& panel, const AreaMetadata& meta,
                         const std::filesystem::path& adjacency_file,
                         const std::filesystem::path& population_file);

}  // namespace msz
