#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jadce/aem_calibration.hpp"
#include "jadce/channel_model.hpp"
#include "jadce/detectors.hpp"
#include "jadce/metrics.hpp"
#include "jadce/pilot_design.hpp"

namespace jadce {

enum class Algorithm { aem_sbl, aem_admm, cb_somp, sbl, admm, somp };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
/// True for the cluster-wise (AEM / CB) algorithms.
bool is_clustered(Algorithm a);

/// Invalid configuration. `errors` holds one "key: message" entry per field.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct ExperimentConfig {
  ExperimentConfig() { scenario.normalize_noise = true; }

  ScenarioConfig scenario;
  Index pilot_length = 64;
  Index cardinality = 0;
  Index pool_factor = 20;
  double bandwidth = 20e6;  // metadata

  std::string sweep_name = "L";
  std::vector<double> sweep_values;  // empty: the single configured value
  std::vector<Algorithm> algorithms = {Algorithm::aem_sbl, Algorithm::aem_admm,
                                       Algorithm::cb_somp, Algorithm::sbl,
                                       Algorithm::admm,    Algorithm::somp};
  Index trials = 1000;
  Index threshold_trials = 0;  // 0: same as trials
  Index training_samples = 2000;
  double tolerance = 1e-4;
  double target_pfa = 1e-3;
  std::uint64_t seed = 1;
  std::string output_dir = "results";
  unsigned threads = 1;

  double rho = 1.0;
  std::optional<double> lambda;  // empty: grid search
  std::vector<double> lambda_grid = {0.1, 0.5, 1.0, 2.0};  // times sigma sqrt(M)
  Index lambda_trials = 20;
  Index admm_max_iter = 2000;
  Index sbl_max_iter = 1000;
  double gamma_max = 1e12;
  Index somp_max_support = 0;  // 0: kappa_g per cluster, L centralized
  bool reduced = true;         // run AEM detectors in span(S_g) coordinates

  // coherence subcommand
  std::vector<Index> coherence_lengths = {16, 32, 64, 128};
  std::vector<Index> coherence_clusters = {1, 2, 4, 8};
  std::vector<Index> coherence_devices = {100, 200, 400, 600, 800, 1000};
  Index coherence_seeds = 5;

  // rip subcommand
  Index rip_support = 4;
  Index rip_samples = 10000;

  /// Effective key=value pairs in canonical order; values the user supplied
  /// are kept verbatim.
  std::vector<std::pair<std::string, std::string>> echo() const;

  std::vector<std::pair<std::string, std::string>> raw;  // as parsed
};

/// Parse a flat `key = value` file ('#' starts a comment). Collects every
/// field error before throwing ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);
/// Sets `key` as if it appeared in the file (used for CLI overrides).
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
/// Cross-field validation; throws ConfigError.
void validate(const ExperimentConfig& config);

/// Config with the sweep axis set to `value`.
ExperimentConfig at_sweep_point(const ExperimentConfig& config, double value);

// ---------------------------------------------------------------------------

/// Everything precomputed for one sweep point: scenario, pilots, per-cluster
/// projections, calibrations and solver factorizations. Immutable once built.
struct Pipeline {
  ExperimentConfig config;
  NetworkScenario scenario;
  PilotBank bank;
  std::vector<ClusterProjector> projectors;
  std::vector<AemCalibration> calibrations;
  std::vector<ReducedCluster> reduced;
  std::vector<AdmmFactor> cluster_factors;
  AemCalibration central_sbl;
  AemCalibration central_admm;
  std::optional<AdmmFactor> central_factor;
  double aem_lambda = 1.0;
  double central_lambda = 1.0;
  Index sweep_index = 0;
};

Pipeline build_pipeline(const ExperimentConfig& config, Index sweep_index);

/// Runs one algorithm on one received block. Cluster-wise algorithms run the
/// clusters one after another; wall time covers decorrelation, projection and
/// the detector itself.
DetectionResult run_detector(const Pipeline& pipeline, Algorithm algorithm,
                             const CMatrix& received);

/// Same result as run_detector for a cluster-wise algorithm, with the clusters
/// dispatched to `threads` concurrent workers.
DetectionResult run_clusters_concurrently(const Pipeline& pipeline, Algorithm algorithm,
                                          const CMatrix& received, unsigned threads);

/// Runs `count` independent tasks on `threads` workers; task i writes only its
/// own outputs, so results do not depend on scheduling.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& task);

struct SummaryRow {
  std::string algorithm;
  std::string sweep_name;
  double sweep_value = 0.0;
  Index trials = 0;
  Index skipped = 0;
  Index diverged = 0;
  double zeta = 0.0;
  MeanAccumulator nmse, pmd, pfa, runtime, iterations;
  double runtime_median = 0.0;
};

struct ResultsTable {
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::string sweep_name;
  std::vector<MetricSample> rows;
  std::vector<std::string> warnings;

  /// One row per (sweep value, algorithm) in sweep then algorithm order.
  std::vector<SummaryRow> summary() const;
};

using Progress = std::function<void(const std::string&)>;

ResultsTable run_experiment(const ExperimentConfig& config, const Progress& progress = {});

/// results.csv, summary.csv and one SVG per metric (none for an empty table).
std::vector<std::filesystem::path> emit_outputs(const ResultsTable& table,
                                                const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

struct RipStats {
  Index support = 0;
  Index samples = 0;
  double min_singular = 0.0;   // smallest over samples
  double max_singular = 0.0;   // largest over samples
  double mean_min_singular = 0.0;
  double mean_max_singular = 0.0;
  double delta_lower = 0.0;    // 1 - min^2
  double delta_upper = 0.0;    // max^2 - 1
};

/// Extreme singular values of random `support`-column submatrices of `pilots`.
RipStats rip_diagnostic(const CMatrix& pilots, Index support, Index samples,
                        std::uint64_t seed);

struct CoherencePoint {
  Index length = 0, clusters = 0, devices = 0, seeds = 0;
  double mean = 0.0, standard_error = 0.0;
};

/// Mutual coherence of generated pilot banks over (L, G, N), averaged over seeds.
std::vector<CoherencePoint> coherence_sweep(const ExperimentConfig& config);

}  // namespace jadce
