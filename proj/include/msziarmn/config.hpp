#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msziarmn/covariates.hpp"
#include "msziarmn/model.hpp"
#include "msziarmn/panel.hpp"
#include "msziarmn/posterior.hpp"
#include "msziarmn/sampler.hpp"

namespace msz {

/// One covariate of a disease's multinomial (x) or presence (z) predictor.
struct CovariateDecl {
  enum class Source { External, NeighborPrevalence, LaggedLogCounts, CumulativeIncidenceDiff };
  std::string name;
  Source source = Source::External;
  std::string disease;  // builders: the disease whose counts are used
  std::string column;   // external: series name in the covariate file (default: name)
  bool standardize = false;
};

struct DiseaseCovariates {
  std::vector<CovariateDecl> x, z;
};

struct SharingDecl {
  std::string name;
  std::vector<std::pair<std::string, std::string>> members;  // (disease, x covariate)
};

struct ResponseCurveSpec {
  std::string disease, covariate;
  double from = 0.0, to = 1.0;
  int points = 50;
  double threshold = 1.0;
};

struct SummaryOptions {
  std::map<std::string, Transform> transforms;  // parameter-name prefix -> transform
  bool lambda_bar = true;                       // needs stored phi
  bool fitted = false;
  std::vector<ResponseCurveSpec> response_curves;
};

/// Generator of an exogenous covariate series for simulation.
struct GeneratedCovariate {
  std::string kind = "normal";  // normal | seasonal
  double period = 52.0;
  double noise = 0.5;
};

/// Generating parameters; keyed maps use the coefficient names of the draws file.
struct TruthSpec {
  std::vector<double> zeta, alpha0, sigma, eta0, rho_ar, initial_presence;
  std::map<std::string, double> alpha;   // free coefficient name -> value
  std::map<std::string, double> eta;     // "<disease>:<z name>" -> value
  std::map<std::string, double> rho_di;  // "<from>-><to>" -> value
  Eigen::MatrixXd Sigma;
};

struct SimulateSpec {
  int N = 0, T = 0;
  double total_mean = 10.0, total_size = 5.0;
  double population = 10000.0;
  std::map<std::string, GeneratedCovariate> generate;
  TruthSpec truth;
};

/// Parsed run configuration. Relative paths are resolved against the
/// directory of the configuration file.
struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  std::filesystem::path source;
  std::string text;  // raw file contents, hashed into manifests

  std::filesystem::path counts, adjacency, population, covariates;  // empty when absent
  std::vector<std::string> diseases;                                 // baseline first; empty -> file order
  ModelVariant variant = ModelVariant::MsZiarmn;
  std::map<std::string, DiseaseCovariates> disease_covariates;
  std::vector<SharingDecl> sharing;
  std::map<std::string, double> initial_presence;
  PriorSpec prior;
  GibbsConfig mcmc;
  double rhat_threshold = 1.05;
  std::filesystem::path output_dir = "output";
  SummaryOptions summary;
  std::optional<SimulateSpec> simulate;

  /// Throws ValidationError naming the offending key (dotted path).
  static RunConfig parse(const std::string& text, const std::filesystem::path& source);
  static RunConfig load(const std::filesystem::path& file);

  /// Every referenced input file exists.
  void check_files() const;
  bool needs_area_metadata() const;
  /// q_k in non-baseline disease order (default 1/2).
  std::vector<double> presence_vector(const std::vector<std::string>& disease_names) const;
};

/// Builds the covariate bundle for a panel. `external` supplies the series of
/// the external declarations; `meta` is required by the spatial builders.
CovariateBundle build_covariates(const RunConfig& cfg, const DiseasePanel& panel, const AreaMetadata* meta,
                                 const std::vector<CovariateSeries>& external);

struct FitInputs {
  DiseasePanel panel;
  std::optional<AreaMetadata> meta;
  CovariateBundle covariates;
};
FitInputs load_inputs(const RunConfig& cfg);

}  // namespace msz
