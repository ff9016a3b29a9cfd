#include "biaslab/sampler.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biaslab/error.h"
#include "biaslab/rng.h"

namespace biaslab {

Strategy parse_strategy(const std::string& name) {
  if (name == "boost") return Strategy::kBoost;
  if (name == "random") return Strategy::kRandom;
  if (name == "dynamic-random") return Strategy::kDynamicRandom;
  if (name == "stratified") return Strategy::kStratified;
  if (name == "dynamic-stratified") return Strategy::kDynamicStratified;
  throw ConfigError("unknown sampler strategy '" + name + "'");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::kBoost: return "boost";
    case Strategy::kRandom: return "random";
    case Strategy::kDynamicRandom: return "dynamic-random";
    case Strategy::kStratified: return "stratified";
    case Strategy::kDynamicStratified: return "dynamic-stratified";
  }
  return "boost";
}

bool is_static(Strategy strategy) {
  return strategy == Strategy::kRandom || strategy == Strategy::kStratified;
}

WeightClass parse_weight_class(const std::string& name) {
  if (name == "predicted") return WeightClass::kPredicted;
  if (name == "true") return WeightClass::kTrueLabel;
  throw ConfigError("unknown weight class '" + name + "' (expected predicted|true)");
}

std::string to_string(WeightClass weight_class) {
  return weight_class == WeightClass::kPredicted ? "predicted" : "true";
}

ClassAggregateScores aggregate_class_scores(std::span<const CalibratedScore> scores,
                                            std::span<const int> labels,
                                            std::size_t num_classes) {
  if (scores.empty()) throw EmptyInput("no scores to aggregate");
  if (scores.size() != labels.size()) throw ShapeError("scores and labels disagree in length");
  std::vector<double> sums(num_classes, 0.0);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= num_classes) throw InvalidParameter("label out of range");
    sums[y] += scores[i].max_score;
    ++counts[y];
  }
  ClassAggregateScores out;
  out.per_class_mean.assign(num_classes, 0.0);
  double present_total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    out.per_class_mean[c] = sums[c] / static_cast<double>(counts[c]);
    present_total += out.per_class_mean[c];
    ++present;
  }
  const double fallback = present_total / static_cast<double>(present);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) out.per_class_mean[c] = fallback;
  }
  return out;
}

double class_weighted_confidence(std::span<const double> logits, std::size_t cls,
                                 const ClassAggregateScores& aggregates) {
  const auto& agg = aggregates.per_class_mean;
  if (logits.size() != agg.size()) throw ShapeError("logits and aggregates disagree in length");
  if (cls >= logits.size()) throw InvalidParameter("weight class out of range");
  const double top = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) denom += std::exp(logits[j] - top) * agg[j];
  return std::exp(logits[cls] - top) * agg[cls] / denom;
}

std::vector<double> boost_weights(std::span<const LogitVector> logits,
                                  std::span<const std::size_t> classes,
                                  const ClassAggregateScores& aggregates) {
  if (logits.size() != classes.size()) throw ShapeError("logits and classes disagree in length");
  if (logits.empty()) throw EmptyInput("no samples to weight");
  for (double s : aggregates.per_class_mean) {
    if (!(s > 0.0)) throw InvalidParameter("class aggregate scores must be positive");
  }
  std::vector<double> weights(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    weights[i] = std::max(0.0, 1.0 - class_weighted_confidence(logits[i], classes[i], aggregates));
  }
  return weights;
}

NormalizedWeights normalize_weights(std::vector<double> weights) {
  NormalizedWeights out;
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      total = 0.0;
      break;
    }
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    out.degenerate = true;
    out.probabilities.assign(weights.size(),
                             weights.empty() ? 0.0 : 1.0 / static_cast<double>(weights.size()));
    return out;
  }
  for (double& w : weights) w /= total;
  out.probabilities = std::move(weights);
  return out;
}

std::vector<double> boost_probabilities(std::span<const LogitVector> logits,
                                        std::span<const std::size_t> classes,
                                        const ClassAggregateScores& aggregates) {
  return normalize_weights(boost_weights(logits, classes, aggregates)).probabilities;
}

SamplerState make_sampler(const SamplerOptions& options, std::uint64_t rng_seed) {
  if (!(options.recency_penalty > 0.0 && options.recency_penalty <= 1.0)) {
    throw InvalidParameter("recency penalty must lie in (0, 1]");
  }
  SamplerState state;
  state.options = options;
  state.rng_seed = rng_seed;
  return state;
}

std::vector<std::size_t> draw_batch(SamplerState& state, std::size_t batch_size) {
  if (batch_size == 0) throw InvalidParameter("batch size must be at least 1");
  if (state.probabilities.empty()) throw EmptyInput("sampler has no probabilities");

  const std::size_t n = state.probabilities.size();
  std::vector<double> cumulative(n);
  double total = 0.0;
  bool valid = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = state.probabilities[i];
    if (!(p >= 0.0) || !std::isfinite(p)) valid = false;
    total += p;
    cumulative[i] = total;
  }
  if (!valid || !(total > 0.0)) {
    ++state.degenerate_events;
    if (!state.history.empty()) state.history.back().degenerate = true;
    state.probabilities.assign(n, 1.0 / static_cast<double>(n));
    std::iota(cumulative.begin(), cumulative.end(), 1.0);
    total = static_cast<double>(n);
  }

  Rng rng(derive_seed(state.rng_seed, state.draw_counter++));
  std::vector<std::size_t> out(batch_size);
  for (auto& idx : out) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
  }
  if (!state.history.empty() && state.history.back().samples.size() == n) {
    auto& samples = state.history.back().samples;
    for (std::size_t idx : out) ++samples[idx].times_drawn;
  }
  return out;
}

std::vector<std::size_t> draw_epoch(SamplerState& state, std::size_t count) {
  if (is_static(state.options.strategy) && !state.frozen_selection.empty()) {
    if (!state.history.empty() && state.history.back().samples.size() == state.probabilities.size()) {
      auto& samples = state.history.back().samples;
      for (std::size_t idx : state.frozen_selection) ++samples[idx].times_drawn;
    }
    return state.frozen_selection;
  }
  auto selection = draw_batch(state, count);
  if (is_static(state.options.strategy)) state.frozen_selection = selection;
  return selection;
}

void epoch_resample(SamplerState& state, const ClassifierModel& model, const Dataset& dataset,
                    const OdinConfig& config) {
  if (model.num_classes() != dataset.num_classes) {
    throw ShapeError("model outputs " + std::to_string(model.num_classes()) +
                     " classes, dataset has " + std::to_string(dataset.num_classes));
  }
  if (dataset.size() == 0) throw EmptyInput("cannot resample an empty dataset");

  const ClassifierModel local = model;
  const Strategy strategy = state.options.strategy;
  const std::size_t n = dataset.size();
  state.temperature = config.temperature;

  std::vector<CalibratedScore> scores;
  if (strategy == Strategy::kBoost || state.options.record_scores) {
    scores = calibrate_batch(local, dataset.features, config);
  }

  std::vector<double> weights;
  switch (strategy) {
    case Strategy::kBoost: {
      state.aggregates = aggregate_class_scores(scores, dataset.labels, dataset.num_classes);
      std::vector<LogitVector> logits;
      std::vector<std::size_t> classes;
      logits.reserve(n);
      classes.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        logits.push_back(scores[i].logits);
        classes.push_back(state.options.weight_class == WeightClass::kPredicted
                              ? scores[i].max_class
                              : static_cast<std::size_t>(dataset.labels[i]));
      }
      weights = boost_weights(logits, classes, state.aggregates);
      if (state.options.recency_penalty < 1.0 && !state.history.empty()) {
        const auto& prev = state.history.back().samples;
        for (std::size_t i = 0; i < n && i < prev.size(); ++i) {
          if (prev[i].times_drawn > 0) weights[i] *= state.options.recency_penalty;
        }
      }
      break;
    }
    case Strategy::kRandom:
    case Strategy::kDynamicRandom:
      weights.assign(n, 1.0);
      break;
    case Strategy::kStratified:
    case Strategy::kDynamicStratified:
      weights.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        weights[i] = 1.0 / static_cast<double>(
                               dataset.class_counts[static_cast<std::size_t>(dataset.labels[i])]);
      }
      break;
  }

  NormalizedWeights normalized = normalize_weights(std::move(weights));
  if (normalized.degenerate) ++state.degenerate_events;
  state.probabilities = std::move(normalized.probabilities);

  EpochHistory entry;
  entry.epoch = state.history.size();
  entry.temperature = config.temperature;
  entry.degenerate = normalized.degenerate;
  entry.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord& rec = entry.samples[i];
    rec.sample_id = i;
    rec.true_class = dataset.labels[i];
    rec.sampling_probability = state.probabilities[i];
    if (!scores.empty()) {
      rec.predicted_class = scores[i].max_class;
      rec.calibrated_score = scores[i].max_score;
    }
  }
  state.history.push_back(std::move(entry));
}

}  // namespace biaslab
