#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hqrc/data.hpp"
#include "hqrc/esn.hpp"
#include "hqrc/forecaster.hpp"
#include "hqrc/metrics.hpp"
#include "hqrc/pod.hpp"
#include "hqrc/reservoir.hpp"

namespace hqrc::experiment {

enum class ModelKind { kHqrc, kEsn };
std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

/// Hyperparameter values enumerated by `sweep`. HQRC configurations are the
/// product virtual_nodes × alpha × beta; ESN ones esn_units × esn_beta.
struct SweepGrid {
  std::vector<int> virtual_nodes{5, 10, 15, 20};
  std::vector<double> alpha{0.3, 0.4, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> beta{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  std::vector<int> esn_units{40, 50, 60, 70, 80, 100, 120, 150, 200, 300, 500, 1000};
  std::vector<double> esn_beta{1e-4, 1e-5, 1e-6, 1e-7};
};

struct ExperimentConfig {
  ModelKind model = ModelKind::kHqrc;
  /// n_in is always taken from pod_modes.
  reservoir::HqrConfig hqrc;
  double hqrc_beta = 1e-7;
  esn::EsnConfig esn;

  int washout = 40;
  int horizon = 300;
  /// Rollout starts, relative to the first snapshot of the evaluated span.
  std::vector<int> eval_starts{116, 40, 66};
  int pod_modes = 5;
  int top_k = 5;
  std::uint64_t seed = 0;

  std::string data;
  std::string out_dir = "out";
  /// Split by index when set, otherwise by date.
  std::optional<Eigen::Index> train_end;
  std::string last_train_date = "1989-12-31";
  data::RegionSpec region;
  double mask_sentinel = -999.0;

  SweepGrid grid;
  std::vector<int> washout_values{20, 30, 40};
  std::string structure_axis = "n_qubits";
  std::vector<double> structure_values{3, 4, 5, 6};
  std::vector<int> mode_values{5, 10};
  double perturb_epsilon = 1e-3;
  int perturb_draws = 10;
  int perturb_start = 116;

  /// Not persisted; chosen by the runner.
  kernels::Exec exec = kernels::Exec::kParallel;

  double beta() const { return model == ModelKind::kEsn ? esn.beta : hqrc_beta; }
  /// Seeds and n_in resolved into the model sub-configs.
  reservoir::HqrConfig resolved_hqrc() const;
  esn::EsnConfig resolved_esn() const;
  /// Short stable identifier of the model hyperparameters, used for ranking ties.
  std::string label() const;
  void validate() const;

  std::string to_json() const;
  /// Unknown keys are rejected so typos do not silently fall back to defaults.
  static ExperimentConfig from_json(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Dataset reduced to scaled modal coefficients, ready for any model.
struct PreparedData {
  data::GsfDataset dataset;
  data::SplitSpec split;
  Eigen::MatrixXd flat;    // N_kept × T
  pod::PodModel pod;       // fitted on the training span
  Eigen::MatrixXd coeffs;  // T × M, unscaled projections of every snapshot
  Eigen::MatrixXd scaled;  // T × M, training scaler applied
  std::vector<Eigen::Index> region;  // empty when the region holds no ocean cell

  Eigen::MatrixXd train_inputs() const { return scaled.middleRows(split.train_begin, split.n_train()); }
  Eigen::Index train_start(int offset) const { return split.train_begin + offset; }
  Eigen::Index test_start(int offset) const { return split.test_begin + offset; }
};

data::SplitSpec resolve_split(const ExperimentConfig& cfg, const data::GriddedSeries& series);
/// Fits POD on the training span and scales every coefficient with it.
PreparedData prepare(const ExperimentConfig& cfg, data::GsfDataset dataset);
/// Reuses an existing POD model instead of fitting one.
PreparedData prepare(const ExperimentConfig& cfg, data::GsfDataset dataset, pod::PodModel pod);

std::unique_ptr<forecast::Forecaster> make_forecaster(const ExperimentConfig& cfg);

struct TrainedModel {
  ExperimentConfig config;
  std::unique_ptr<forecast::Forecaster> model;
  readout::ReadoutWeights weights;
  double train_seconds = 0.0;
};

/// Builds the model, washes out, collects the open-loop design matrix over
/// the training span and fits the readout. Timing covers the whole build.
TrainedModel run_train(const ExperimentConfig& cfg, const PreparedData& prep);

/// Model directory: config.json, pod.bin, readout.bin.
void save_model(const std::filesystem::path& dir, const TrainedModel& model, const pod::PodModel& pod);
struct LoadedModel {
  ExperimentConfig config;
  pod::PodModel pod;
  std::unique_ptr<forecast::Forecaster> model;
};
LoadedModel load_model(const std::filesystem::path& dir);

struct ForecastResult {
  Eigen::Index start = 0;  // absolute snapshot index of the first prediction
  int horizon = 0;
  /// Steps with truth available; metrics cover only these.
  Eigen::Index overlap = 0;
  bool truncated = false;
  Eigen::MatrixXd scaled;  // horizon × M, within [0, 1]
  Eigen::MatrixXd coeffs;  // horizon × M, unscaled
  Eigen::MatrixXd persistence_coeffs;
  metrics::MetricReport report;
  metrics::MetricReport persistence;

  /// N_kept × horizon reconstruction of the predicted coefficients.
  Eigen::MatrixXd grids(const pod::PodBasis& basis) const;
};

/// Metrics for externally produced unscaled coefficients (ensemble means).
/// Truth is read up to `truth_end` (exclusive, default: end of the series).
ForecastResult evaluate(const PreparedData& prep, const Eigen::MatrixXd& coeffs, Eigen::Index start,
                        std::optional<Eigen::Index> truth_end = std::nullopt);

ForecastResult run_forecast(const ExperimentConfig& cfg, const PreparedData& prep, forecast::Forecaster& model,
                            Eigen::Index start, int horizon, std::optional<Eigen::Index> truth_end = std::nullopt);

/// Mean validation RMNSE over the configured starts on the test span.
double validation_rmnse(const ExperimentConfig& cfg, const PreparedData& prep, forecast::Forecaster& model);

struct SweepEntry {
  ExperimentConfig config;
  std::string label;
  double score = 0.0;  // validation RMNSE; +inf when the run failed
  double train_seconds = 0.0;
  std::string error;
  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::vector<SweepEntry> ranked;  // ascending score, ties by label
  std::size_t top_k = 0;
  bool all_ok() const;
};

/// Every configuration the grid describes, built on top of `base`.
std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base);

using Scorer = std::function<double(const ExperimentConfig&, double& train_seconds)>;
/// Scores configurations concurrently and ranks them. A throwing scorer
/// marks its entry failed without stopping the others.
SweepResult sweep(const std::vector<ExperimentConfig>& configs, const Scorer& scorer, int top_k);
/// Trains each configuration and scores it by validation RMNSE.
SweepResult sweep(const std::vector<ExperimentConfig>& configs, const PreparedData& prep, int top_k);

struct EnsembleForecast {
  std::vector<Eigen::MatrixXd> members;  // unscaled coefficients
  metrics::EnsembleStats stats;
  ForecastResult of_mean;  // error of the ensemble mean
  metrics::MetricReport mean_of_errors;
};
EnsembleForecast ensemble_forecast(const std::vector<ExperimentConfig>& configs, const PreparedData& prep,
                                   Eigen::Index start, int horizon);

struct WashoutRow {
  int washout = 0;
  double rmse_train = 0.0;
  double rmse_test = 0.0;
  double rmnse_test = 0.0;
};
std::vector<WashoutRow> ablate_washout(const ExperimentConfig& cfg, const PreparedData& prep,
                                       const std::vector<int>& values);

struct StructureRow {
  std::string axis;
  double value = 0.0;
  double rmnse = 0.0;
  double rmse_test = 0.0;
};
/// axis ∈ {n_qubits, n_reservoirs, coupling_j, tau}.
ExperimentConfig with_structure(const ExperimentConfig& cfg, const std::string& axis, double value);
std::vector<StructureRow> ablate_structure(const ExperimentConfig& cfg, const PreparedData& prep,
                                           const std::string& axis, const std::vector<double>& values);

struct ModesRow {
  int modes = 0;
  int n_reservoirs = 0;
  double rmnse = 0.0;
  double rmse_test = 0.0;
  double recon_floor_test = 0.0;
};
/// HQRC needs N_in | N_qrc, so the reservoir count is raised to the next
/// multiple of the mode count when necessary.
std::vector<ModesRow> ablate_modes(const ExperimentConfig& cfg, const data::GsfDataset& dataset,
                                   const std::vector<int>& values);

struct PerturbationResult {
  Eigen::MatrixXd unperturbed;  // horizon × M, scaled
  std::vector<Eigen::MatrixXd> members;
  metrics::EnsembleStats stats;
  /// Per step: mean over members and modes of |member − unperturbed|.
  Eigen::VectorXd mean_abs_deviation;
};
/// Adds uniform ±ε draws to the first injected input of each rollout.
PerturbationResult perturbation_study(const ExperimentConfig& cfg, const PreparedData& prep,
                                      forecast::Forecaster& model, Eigen::Index start, double epsilon, int n_draws,
                                      std::uint64_t seed);

/// Plain numeric CSV with a header line.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

}  // namespace hqrc::experiment
