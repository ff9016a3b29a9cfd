#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "biaslab/calibration.h"
#include "biaslab/data.h"
#include "biaslab/model.h"

namespace biaslab {

enum class Strategy { kBoost, kRandom, kDynamicRandom, kStratified, kDynamicStratified };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy strategy);

/// Static baselines reuse the selection drawn in their first epoch.
bool is_static(Strategy strategy);

/// Which class indexes the per-sample confidence in the BOOST weight.
enum class WeightClass { kPredicted, kTrueLabel };

WeightClass parse_weight_class(const std::string& name);
std::string to_string(WeightClass weight_class);

/// Per-class mean of calibrated max-scores, keyed by true label.
struct ClassAggregateScores {
  std::vector<double> per_class_mean;
};

/// Empty classes take the mean of the present class means.
ClassAggregateScores aggregate_class_scores(std::span<const CalibratedScore> scores,
                                            std::span<const int> labels, std::size_t num_classes);

/// Class-aware confidence of one sample:
/// exp(z_c) S_c / sum_j exp(z_j) S_j, with c = `cls`.
double class_weighted_confidence(std::span<const double> logits, std::size_t cls,
                                 const ClassAggregateScores& aggregates);

/// Inverted confidences 1 - raw_i, not yet normalized.
std::vector<double> boost_weights(std::span<const LogitVector> logits,
                                  std::span<const std::size_t> classes,
                                  const ClassAggregateScores& aggregates);

struct NormalizedWeights {
  std::vector<double> probabilities;
  bool degenerate = false;  // all weights were zero; uniform substituted
};

/// Divides by the sum. A zero (or non-finite) total yields the uniform distribution.
NormalizedWeights normalize_weights(std::vector<double> weights);

/// boost_weights followed by normalize_weights.
std::vector<double> boost_probabilities(std::span<const LogitVector> logits,
                                        std::span<const std::size_t> classes,
                                        const ClassAggregateScores& aggregates);

struct SampleRecord {
  std::size_t sample_id = 0;
  int true_class = 0;
  std::size_t predicted_class = 0;
  double calibrated_score = 0.0;
  double sampling_probability = 0.0;
  std::size_t times_drawn = 0;
};

struct EpochHistory {
  std::size_t epoch = 0;
  double temperature = 1.0;
  bool degenerate = false;
  std::vector<SampleRecord> samples;
};

struct SamplerOptions {
  Strategy strategy = Strategy::kBoost;
  WeightClass weight_class = WeightClass::kTrueLabel;
  /// Multiplier on the weight of samples drawn in the previous epoch. 1 = off.
  double recency_penalty = 1.0;
  /// Calibrate and record scores for baseline strategies too.
  bool record_scores = true;
};

struct SamplerState {
  SamplerOptions options;
  double temperature = 1.0;
  std::vector<double> probabilities;
  std::vector<EpochHistory> history;
  std::uint64_t rng_seed = 0;
  std::uint64_t draw_counter = 0;
  std::size_t degenerate_events = 0;
  std::vector<std::size_t> frozen_selection;
  ClassAggregateScores aggregates;
};

SamplerState make_sampler(const SamplerOptions& options, std::uint64_t rng_seed);

/// batch_size i.i.d. indices from the multinomial over state.probabilities.
/// Deterministic in (rng_seed, draw_counter); bumps the counter and the draw
/// counts of the current history entry. An all-zero distribution is replaced
/// by the uniform one and counted in degenerate_events.
std::vector<std::size_t> draw_batch(SamplerState& state, std::size_t batch_size);

/// The epoch's training selection of `count` indices. Static strategies
/// return their first selection again on later epochs.
std::vector<std::size_t> draw_epoch(SamplerState& state, std::size_t count);

/// Recomputes the sampling distribution before an epoch and appends a
/// history entry. Scores come from a private copy of `model`.
void epoch_resample(SamplerState& state, const ClassifierModel& model, const Dataset& dataset,
                    const OdinConfig& config);

}  // namespace biaslab
