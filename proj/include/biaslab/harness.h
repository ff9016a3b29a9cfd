#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biaslab/calibration.h"
#include "biaslab/data.h"
#include "biaslab/metrics.h"
#include "biaslab/model.h"
#include "biaslab/sampler.h"
#include "biaslab/scheduler.h"

namespace biaslab {

enum class DatasetKind { kBlobs, kCsv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kBlobs;
  // blobs
  std::vector<std::size_t> train_counts{900, 100};
  std::vector<std::size_t> test_counts;  // empty: same as train_counts
  std::size_t dims = 2;
  double separation = 2.0;
  // csv
  std::string csv_path;
  std::string test_csv_path;  // empty: stratified holdout of csv_path
  std::string label_column = "label";
  double holdout_fraction = 0.3;
  // optional long-tail resampling of the train split
  std::optional<double> pareto_scale;
};

enum class EvalMode { kBoost, kControl };

EvalMode parse_eval_mode(const std::string& name);
std::string to_string(EvalMode mode);

struct ExperimentConfig {
  DatasetSpec dataset;
  SamplerOptions sampler;
  TemperatureSchedule schedule;
  std::optional<std::size_t> temp_horizon;  // inverse-linear; defaults to epochs
  double epsilon = 0.05;
  PerturbationSign perturbation_sign = PerturbationSign::kAsWritten;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::size_t hidden = 16;
  std::vector<std::uint64_t> seeds{1};
  std::optional<EvalMode> eval_mode;  // default: boost for BOOST runs, control otherwise
  std::string out_dir = "out";

  /// Throws ConfigError on an unusable configuration.
  void validate() const;
  /// Schedule with the inverse-linear horizon resolved.
  TemperatureSchedule resolved_schedule() const;
  EvalMode resolved_eval_mode() const;
};

struct ExperimentData {
  Dataset train;
  Dataset test;
};

/// Builds the train/test splits for one seed. The test split carries the
/// train split's feature_std.
ExperimentData build_datasets(const DatasetSpec& spec, std::uint64_t seed);

/// Deterministic per-class holdout; both parts keep the source class indexing.
ExperimentData split_holdout(const Dataset& dataset, double test_fraction, std::uint64_t seed);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double temperature = 1.0;
  double sampling_entropy = 0.0;
};

struct TrainingResult {
  ClassifierModel model;
  std::vector<EpochLog> per_epoch;
  SamplerState sampler;
};

/// Per epoch: schedule sets T, the sampler rescores the train split on a
/// model copy, then the model consumes the epoch's selection batch by batch.
TrainingResult run_training(const ExperimentConfig& config, const Dataset& train,
                            std::uint64_t seed);

struct EvaluationOptions {
  double temperature = 1.0;
  double epsilon = 0.05;
  PerturbationSign perturbation_sign = PerturbationSign::kAsWritten;
  WeightClass weight_class = WeightClass::kTrueLabel;
  std::size_t batch_size = 32;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
};

/// boost: calibrated second-pass profiles drive the prediction log.
/// control: a copy of the model is fine-tuned one BOOST epoch on `train`,
/// then scored with the plain softmax. `model` is never modified.
MetricsReport run_evaluation(const ClassifierModel& model, const Dataset& train,
                             const Dataset& test, EvalMode mode, const EvaluationOptions& options);

/// Prediction log behind run_evaluation (same semantics).
PredictionLog evaluation_log(const ClassifierModel& model, const Dataset& train,
                             const Dataset& test, EvalMode mode, const EvaluationOptions& options);

struct RunRecord {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  EvalMode eval_mode = EvalMode::kBoost;
  std::vector<EpochLog> per_epoch;
  MetricsReport metrics;
  SamplerState sampler;
  ClassifierModel model;
  std::vector<std::string> class_names;
  std::vector<int> test_labels;
  std::vector<int> test_predictions;
  Matrix embeddings;  // hidden activations per test sample
};

EvaluationOptions evaluation_options(const ExperimentConfig& config, std::uint64_t seed);

/// Datasets, training and evaluation for one seed.
RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed);

/// run_experiment for every seed in the config.
std::vector<RunRecord> run_all_seeds(const ExperimentConfig& config);

/// Every strategy in `strategies` over every seed; other settings shared.
std::vector<RunRecord> run_comparison(const ExperimentConfig& config,
                                      const std::vector<Strategy>& strategies);

}  // namespace biaslab
