#include "biaslab/harness.h"

#include <algorithm>
#include <cmath>

#include "biaslab/error.h"
#include "biaslab/rng.h"

namespace biaslab {

namespace {

// Stream ids for derive_seed; every random consumer of a run gets its own.
enum : std::uint64_t {
  kStreamTrainData = 1,
  kStreamTestData = 2,
  kStreamPareto = 3,
  kStreamHoldout = 4,
  kStreamModelInit = 10,
  kStreamSampler = 11,
  kStreamControlTune = 12,
};

Dataset subset(const Dataset& source, const std::vector<std::size_t>& rows, Split split) {
  Dataset out;
  out.num_classes = source.num_classes;
  out.class_names = source.class_names;
  out.split = split;
  out.features = Matrix(rows.size(), source.dims());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(source.features.row(rows[i]).begin(), source.features.row(rows[i]).end(),
              out.features.row(i).begin());
    out.labels.push_back(source.labels[rows[i]]);
  }
  finalize(out);
  return out;
}

void train_on_selection(ClassifierModel& model, const Dataset& train,
                        const std::vector<std::size_t>& selection, std::size_t batch_size,
                        double learning_rate, double* mean_loss) {
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < selection.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, selection.size() - start);
    const std::span<const std::size_t> rows(selection.data() + start, len);
    total += train_step(model, train.features, train.labels, rows, learning_rate);
    ++batches;
  }
  if (mean_loss != nullptr) *mean_loss = batches > 0 ? total / static_cast<double>(batches) : 0.0;
}

}  // namespace

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "boost") return EvalMode::kBoost;
  if (name == "control") return EvalMode::kControl;
  throw ConfigError("unknown evaluation mode '" + name + "' (expected boost|control)");
}

std::string to_string(EvalMode mode) { return mode == EvalMode::kBoost ? "boost" : "control"; }

void ExperimentConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (hidden == 0) throw ConfigError("hidden width must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative value");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  if (!(sampler.recency_penalty > 0.0 && sampler.recency_penalty <= 1.0)) {
    throw ConfigError("recency penalty must lie in (0, 1]");
  }
  if (dataset.kind == DatasetKind::kCsv && dataset.csv_path.empty()) {
    throw ConfigError("csv dataset requires a path");
  }
  if (dataset.kind == DatasetKind::kBlobs && dataset.train_counts.empty()) {
    throw ConfigError("blobs dataset requires class counts");
  }
  try {
    resolved_schedule().validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

TemperatureSchedule ExperimentConfig::resolved_schedule() const {
  TemperatureSchedule s = schedule;
  s.horizon_epochs = temp_horizon.value_or(epochs);
  return s;
}

EvalMode ExperimentConfig::resolved_eval_mode() const {
  return eval_mode.value_or(sampler.strategy == Strategy::kBoost ? EvalMode::kBoost
                                                                 : EvalMode::kControl);
}

ExperimentData split_holdout(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t c = 0; c < dataset.num_classes; ++c) {
    auto rows = dataset.rows_of_class(static_cast<int>(c));
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(rows.size())));
    if (rows.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  ExperimentData out{subset(dataset, train_rows, Split::kTrain),
                     subset(dataset, test_rows, Split::kTest)};
  out.test.feature_std = out.train.feature_std;
  return out;
}

ExperimentData build_datasets(const DatasetSpec& spec, std::uint64_t seed) {
  ExperimentData data;
  if (spec.kind == DatasetKind::kBlobs) {
    data.train = make_blobs(spec.train_counts, spec.dims, spec.separation,
                            derive_seed(seed, kStreamTrainData), Split::kTrain);
    const auto& test_counts = spec.test_counts.empty() ? spec.train_counts : spec.test_counts;
    if (test_counts.size() != spec.train_counts.size()) {
      throw ConfigError("test counts must list one entry per class");
    }
    data.test = make_blobs(test_counts, spec.dims, spec.separation,
                           derive_seed(seed, kStreamTestData), Split::kTest);
  } else {
    Dataset full = load_csv(spec.csv_path, spec.label_column);
    if (spec.test_csv_path.empty()) {
      data = split_holdout(full, spec.holdout_fraction, derive_seed(seed, kStreamHoldout));
    } else {
      data.train = std::move(full);
      data.test = load_csv(spec.test_csv_path, spec.label_column);
      data.test.split = Split::kTest;
      if (data.test.class_names != data.train.class_names) {
        throw ConfigError("test CSV label set differs from the train CSV label set");
      }
      if (data.test.dims() != data.train.dims()) {
        throw ConfigError("test CSV feature count differs from the train CSV");
      }
    }
  }
  if (spec.pareto_scale) {
    ParetoTailSpec tail;
    tail.scale = *spec.pareto_scale;
    tail.rng_seed = derive_seed(seed, kStreamPareto);
    data.train = pareto_resample(data.train, tail);
  }
  data.test.feature_std = data.train.feature_std;
  return data;
}

TrainingResult run_training(const ExperimentConfig& config, const Dataset& train,
                            std::uint64_t seed) {
  config.validate();
  if (train.size() == 0) throw EmptyInput("training split is empty");
  const TemperatureSchedule schedule = config.resolved_schedule();

  TrainingResult result{
      ClassifierModel::init(train.dims(), config.hidden, train.num_classes,
                            derive_seed(seed, kStreamModelInit)),
      {},
      make_sampler(config.sampler, derive_seed(seed, kStreamSampler))};

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.temperature = temperature_at(schedule, epoch);
    const OdinConfig odin{log.temperature, config.epsilon, train.feature_std,
                          config.perturbation_sign};
    try {
      epoch_resample(result.sampler, result.model, train, odin);
      const auto selection = draw_epoch(result.sampler, train.size());
      train_on_selection(result.model, train, selection, config.batch_size, config.learning_rate,
                         &log.loss);
    } catch (const Error& e) {
      throw Error("epoch " + std::to_string(epoch) + " (seed " + std::to_string(seed) +
                  ", sampler " + to_string(config.sampler.strategy) + "): " + e.what());
    }
    log.sampling_entropy = entropy(result.sampler.probabilities);
    result.per_epoch.push_back(log);
  }
  return result;
}

PredictionLog evaluation_log(const ClassifierModel& model, const Dataset& train,
                             const Dataset& test, EvalMode mode, const EvaluationOptions& options) {
  if (test.size() == 0) throw EmptyInput("test split is empty");
  if (model.num_classes() != test.num_classes || model.num_features() != test.dims()) {
    throw ConfigError("model shape (" + std::to_string(model.num_features()) + " features, " +
                      std::to_string(model.num_classes()) + " classes) does not match the test split (" +
                      std::to_string(test.dims()) + " features, " +
                      std::to_string(test.num_classes) + " classes)");
  }
  const std::vector<double>& std_source =
      test.feature_std.size() == test.dims() ? test.feature_std : train.feature_std;
  const OdinConfig odin{options.temperature, options.epsilon, std_source,
                        options.perturbation_sign};

  PredictionLog log;
  log.num_classes = test.num_classes;
  log.entries.reserve(test.size());

  if (mode == EvalMode::kBoost) {
    const auto scores = calibrate_batch(model, test.features, odin);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      log.entries.push_back({i, test.labels[i], static_cast<int>(scores[i].max_class),
                             scores[i].softmax_profile});
    }
    return log;
  }

  if (model.num_classes() != train.num_classes || train.dims() != model.num_features()) {
    throw ConfigError("control fine-tune split does not match the model shape");
  }
  ClassifierModel tuned = model;
  SamplerOptions tune_options;
  tune_options.strategy = Strategy::kBoost;
  tune_options.weight_class = options.weight_class;
  tune_options.record_scores = false;
  SamplerState sampler = make_sampler(tune_options, derive_seed(options.seed, kStreamControlTune));
  const OdinConfig tune_odin{options.temperature, options.epsilon, train.feature_std,
                             options.perturbation_sign};
  epoch_resample(sampler, tuned, train, tune_odin);
  const auto selection = draw_epoch(sampler, train.size());
  train_on_selection(tuned, train, selection, options.batch_size, options.learning_rate, nullptr);

  for (std::size_t i = 0; i < test.size(); ++i) {
    auto profile = ts_softmax(forward(tuned, test.features.row(i)), 1.0);
    const auto top = static_cast<int>(std::max_element(profile.begin(), profile.end()) -
                                      profile.begin());
    log.entries.push_back({i, test.labels[i], top, std::move(profile)});
  }
  return log;
}

MetricsReport run_evaluation(const ClassifierModel& model, const Dataset& train,
                             const Dataset& test, EvalMode mode, const EvaluationOptions& options) {
  return build_report(evaluation_log(model, train, test, mode, options));
}

EvaluationOptions evaluation_options(const ExperimentConfig& config, std::uint64_t seed) {
  EvaluationOptions options;
  options.temperature = temperature_at(config.resolved_schedule(), config.epochs - 1);
  options.epsilon = config.epsilon;
  options.perturbation_sign = config.perturbation_sign;
  options.weight_class = config.sampler.weight_class;
  options.batch_size = config.batch_size;
  options.learning_rate = config.learning_rate;
  options.seed = seed;
  return options;
}

RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  const ExperimentData data = build_datasets(config.dataset, seed);
  TrainingResult trained = run_training(config, data.train, seed);

  RunRecord record;
  record.config = config;
  record.seed = seed;
  record.eval_mode = config.resolved_eval_mode();
  const PredictionLog log = evaluation_log(trained.model, data.train, data.test, record.eval_mode,
                                           evaluation_options(config, seed));
  record.metrics = build_report(log);
  record.per_epoch = std::move(trained.per_epoch);
  record.sampler = std::move(trained.sampler);
  record.class_names = data.test.class_names;
  for (const auto& e : log.entries) {
    record.test_labels.push_back(e.true_label);
    record.test_predictions.push_back(e.predicted_label);
  }
  record.embeddings = Matrix(data.test.size(), trained.model.num_hidden());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const auto h = embed(trained.model, data.test.features.row(i));
    std::copy(h.begin(), h.end(), record.embeddings.row(i).begin());
  }
  record.model = std::move(trained.model);
  return record;
}

std::vector<RunRecord> run_all_seeds(const ExperimentConfig& config) {
  config.validate();
  std::vector<RunRecord> records;
  for (std::uint64_t seed : config.seeds) records.push_back(run_experiment(config, seed));
  return records;
}

std::vector<RunRecord> run_comparison(const ExperimentConfig& config,
                                      const std::vector<Strategy>& strategies) {
  std::vector<RunRecord> records;
  for (Strategy s : strategies) {
    ExperimentConfig arm = config;
    arm.sampler.strategy = s;
    for (auto& r : run_all_seeds(arm)) records.push_back(std::move(r));
  }
  return records;
}

}  // namespace biaslab
