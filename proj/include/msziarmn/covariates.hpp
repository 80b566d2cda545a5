#pragma once

#include <span>
#include <string>
#include <vector>

#include "msziarmn/panel.hpp"

namespace msz {

/// A covariate over (area, time). Only times t >= 1 (0-based) carry values;
/// the first time has no likelihood term and is stored as 0.
struct CovariateSeries {
  std::string name;
  int areas = 0;
  int times = 0;
  std::vector<double> values;  // values[i * times + t]

  CovariateSeries() = default;
  CovariateSeries(std::string name, int areas, int times);

  double at(int i, int t) const { return values[static_cast<std::size_t>(i) * times + t]; }
  double& at(int i, int t) { return values[static_cast<std::size_t>(i) * times + t]; }
};

/// Centering and scaling applied to a covariate. The sd is the sample (n-1)
/// standard deviation over every (area, t >= 1) cell.
struct Standardization {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
  static constexpr const char* kConvention = "sample_sd_n_minus_1_over_cells_t_ge_2";
};

/// log( sum_{j in NE(i)} y[k][j][t-1] / sum_{j in NE(i)} pop_j + 1 ).
CovariateSeries neighbor_prevalence(const DiseasePanel& panel, const AreaMetadata& meta, int k);

/// log( y[k][i][t-1] + 1 ).
CovariateSeries lagged_log_counts(const DiseasePanel& panel, int k);

/// ( sum_{s<t} y[k][i][s] - sum_{s<t} y[0][i][s] ) / pop_i, for a non-baseline k.
CovariateSeries cumulative_incidence_diff(const DiseasePanel& panel, const AreaMetadata& meta, int k);

struct StandardizedSeries {
  CovariateSeries series;
  Standardization record;
};

/// Centres to mean 0 and scales to sample sd 1; throws on a constant series.
StandardizedSeries standardize(const CovariateSeries& series);

/// A (non-baseline disease, covariate slot) address in the multinomial design.
struct CoefficientSlot {
  int disease = 0;  // 0-based among non-baseline diseases (0 <-> disease index 1)
  int covariate = 0;
};

/// Slots forced to share a single coefficient.
struct SharingGroup {
  std::string name;
  std::vector<CoefficientSlot> slots;
};

/// Design matrices for the multinomial (x) and presence (z) predictors of each
/// non-baseline disease, with the map from covariate slots to free coefficients.
class CovariateBundle {
 public:
  CovariateBundle() = default;
  CovariateBundle(std::vector<std::string> disease_names, int areas, int times,
                  std::vector<std::vector<CovariateSeries>> x, std::vector<std::vector<CovariateSeries>> z,
                  std::vector<SharingGroup> sharing = {}, std::vector<Standardization> records = {});

  /// Bundle with no covariates at all.
  static CovariateBundle empty(const DiseasePanel& panel);

  int non_baseline() const { return static_cast<int>(names_.size()); }
  int areas() const { return N_; }
  int times() const { return T_; }
  const std::vector<std::string>& disease_names() const { return names_; }

  int x_count(int d) const { return static_cast<int>(x_names_[d].size()); }
  int z_count(int d) const { return static_cast<int>(z_names_[d].size()); }
  const std::vector<std::string>& x_names(int d) const { return x_names_[d]; }
  const std::vector<std::string>& z_names(int d) const { return z_names_[d]; }

  std::span<const double> x_row(int d, int i, int t) const {
    const auto p = static_cast<std::size_t>(x_count(d));
    return {x_[d].data() + (static_cast<std::size_t>(i) * T_ + t) * p, p};
  }
  std::span<const double> z_row(int d, int i, int t) const {
    const auto p = static_cast<std::size_t>(z_count(d));
    return {z_[d].data() + (static_cast<std::size_t>(i) * T_ + t) * p, p};
  }

  /// Number of free multinomial coefficients after tying sharing groups.
  int free_alpha_count() const { return static_cast<int>(free_names_.size()); }
  const std::vector<std::string>& free_alpha_names() const { return free_names_; }
  /// Free-coefficient index used by each x slot of disease d.
  const std::vector<int>& alpha_map(int d) const { return alpha_map_[d]; }

  /// Expands free coefficients into the per-slot vector for disease d.
  std::vector<double> expand_alpha(int d, std::span<const double> free) const;

  const std::vector<SharingGroup>& sharing_groups() const { return sharing_; }
  const std::vector<Standardization>& standardization() const { return records_; }

 private:
  std::vector<std::string> names_;
  int N_ = 0, T_ = 0;
  std::vector<std::vector<double>> x_, z_;
  std::vector<std::vector<std::string>> x_names_, z_names_;
  std::vector<SharingGroup> sharing_;
  std::vector<Standardization> records_;
  std::vector<std::vector<int>> alpha_map_;
  std::vector<std::string> free_names_;
};

/// Reads a long-format covariate file (name,area,time,value) into one series
/// per name; every (area, t >= 1) cell must be present.
std::vector<CovariateSeries> load_covariates(const DiseasePanel& panel, const std::filesystem::path& file);

void write_covariates(const DiseasePanel& panel, const std::vector<CovariateSeries>& series,
                      const std::filesystem::path& file);

}  // namespace msz
