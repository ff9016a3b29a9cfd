#include "biaslab/sampler.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "biaslab/error.h"
#include "oracles.h"
#include "support.h"

using namespace biaslab;

namespace {

CalibratedScore score_of(double s) {
  CalibratedScore c;
  c.max_score = s;
  return c;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

OdinConfig odin_for(const Dataset& d, double t = 1.0) {
  OdinConfig c;
  c.temperature = t;
  c.grad_std = d.feature_std;
  return c;
}

SamplerState sampler_with(Strategy s, WeightClass w = WeightClass::kTrueLabel, std::uint64_t seed = 1) {
  SamplerOptions o;
  o.strategy = s;
  o.weight_class = w;
  return make_sampler(o, seed);
}

// A model trained a few epochs on uniform draws; confident on the majority.
ClassifierModel majority_confident_model(const Dataset& d) {
  auto m = ClassifierModel::init(d.dims(), 8, d.num_classes, 3);
  const auto rows = testing_support::all_rows(d.size());
  for (int step = 0; step < 150; ++step) train_step(m, d.features, d.labels, rows, 0.5);
  return m;
}

}  // namespace

TEST(Aggregate, ClassMeans) {
  const std::vector<CalibratedScore> scores{score_of(0.9), score_of(0.7), score_of(0.5)};
  const std::vector<int> labels{0, 0, 1};
  const auto agg = aggregate_class_scores(scores, labels, 2);
  EXPECT_NEAR(agg.per_class_mean[0], 0.8, 1e-15);
  EXPECT_NEAR(agg.per_class_mean[1], 0.5, 1e-15);
}

TEST(Aggregate, ConstantScores) {
  const std::vector<CalibratedScore> scores(6, score_of(0.42));
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  for (double m : aggregate_class_scores(scores, labels, 3).per_class_mean) EXPECT_DOUBLE_EQ(m, 0.42);
}

TEST(Aggregate, EmptyClassTakesMeanOfPresentClasses) {
  const std::vector<CalibratedScore> scores{score_of(0.9), score_of(0.7), score_of(0.4)};
  const std::vector<int> labels{0, 0, 2};
  const auto agg = aggregate_class_scores(scores, labels, 3);
  // present means: class 0 = 0.8, class 2 = 0.4 -> fallback (0.8 + 0.4) / 2
  EXPECT_NEAR(agg.per_class_mean[1], 0.6, 1e-15);
}

TEST(Aggregate, EmptyInputThrows) {
  EXPECT_THROW(aggregate_class_scores({}, {}, 2), EmptyInput);
}

TEST(BoostProbabilities, SymmetricSamples) {
  const std::vector<LogitVector> logits{{0.0, 0.0}, {0.0, 0.0}};
  const std::vector<std::size_t> cls{0, 1};
  const auto p = boost_probabilities(logits, cls, {{0.6, 0.6}});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(BoostProbabilities, InvertAndRenormalize) {
  // Three single-sample evaluations with raw confidences 0.5, 0.3, 0.2.
  const LogitVector z{std::log(0.5), std::log(0.3), std::log(0.2)};
  const std::vector<LogitVector> logits{z, z, z};
  const std::vector<std::size_t> cls{0, 1, 2};
  const ClassAggregateScores equal{{0.7, 0.7, 0.7}};
  EXPECT_NEAR(class_weighted_confidence(z, 1, equal), 0.3, 1e-15);
  const auto p = boost_probabilities(logits, cls, equal);
  // inverted [0.5, 0.7, 0.8] / 2.0
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.35, 1e-15);
  EXPECT_NEAR(p[2], 0.40, 1e-15);
}

TEST(BoostProbabilities, AggregatesReweightClasses) {
  // exp(z_c) S_c / sum_j exp(z_j) S_j with z = 0: raw_0 = 0.9 / 1.2
  const std::vector<LogitVector> logits{{0.0, 0.0}};
  EXPECT_NEAR(class_weighted_confidence(logits[0], 0, {{0.9, 0.3}}), 0.75, 1e-15);
}

TEST(BoostProbabilities, FullyConfidentSampleGetsNoWeight) {
  std::vector<LogitVector> logits(10, LogitVector{0.0, 0.0});
  logits[3] = {60.0, -60.0};
  const std::vector<std::size_t> cls(10, 0);
  const auto p = boost_probabilities(logits, cls, {{0.5, 0.5}});
  EXPECT_LT(p[3], 1e-40);
  EXPECT_NEAR(sum(p), 1.0, 1e-12);
}

TEST(BoostProbabilities, RejectsNonPositiveAggregate) {
  const std::vector<LogitVector> logits{{0.0, 0.0}};
  const std::vector<std::size_t> cls{0};
  EXPECT_THROW(boost_probabilities(logits, cls, {{0.5, 0.0}}), InvalidParameter);
}

TEST(BoostProbabilities, AllConfidentIsDegenerateUniform) {
  const std::vector<double> w{0.0, 0.0, 0.0};
  const auto n = normalize_weights(w);
  EXPECT_TRUE(n.degenerate);
  for (double p : n.probabilities) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(BoostProbabilities, RankInversionWithinClass) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(4);
    ClassAggregateScores agg;
    for (std::size_t c = 0; c < k; ++c) agg.per_class_mean.push_back(rng.uniform(0.05, 1.0));
    const std::size_t cls = rng.below(k);
    std::vector<LogitVector> logits;
    for (int i = 0; i < 12; ++i) logits.push_back(testing_support::random_vector(rng, k, 5.0));
    const std::vector<std::size_t> classes(logits.size(), cls);
    const auto p = boost_probabilities(logits, classes, agg);
    ASSERT_NEAR(sum(p), 1.0, 1e-9);
    for (std::size_t a = 0; a < logits.size(); ++a) {
      for (std::size_t b = 0; b < logits.size(); ++b) {
        const double ra = class_weighted_confidence(logits[a], cls, agg);
        const double rb = class_weighted_confidence(logits[b], cls, agg);
        if (ra < rb) ASSERT_GT(p[a], p[b]);
      }
    }
  }
}

TEST(DrawBatch, PointMass) {
  auto s = sampler_with(Strategy::kBoost);
  s.probabilities = {1.0, 0.0, 0.0};
  for (auto idx : draw_batch(s, 500)) EXPECT_EQ(idx, 0u);
}

TEST(DrawBatch, FrequenciesMatchProbabilities) {
  auto s = sampler_with(Strategy::kBoost, WeightClass::kTrueLabel, 123);
  s.probabilities = {0.2, 0.8};
  std::vector<std::size_t> counts(2, 0);
  for (auto idx : draw_batch(s, 100000)) ++counts[idx];
  EXPECT_NEAR(counts[1] / 100000.0, 0.8, 0.01);
  EXPECT_GT(oracle::chi_square_p(counts, s.probabilities), 0.001);
}

TEST(DrawBatch, DeterministicForSeedAndCounter) {
  auto a = sampler_with(Strategy::kBoost, WeightClass::kTrueLabel, 9);
  auto b = sampler_with(Strategy::kBoost, WeightClass::kTrueLabel, 9);
  a.probabilities = b.probabilities = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(draw_batch(a, 64), draw_batch(b, 64));
  const auto next = draw_batch(a, 64);
  EXPECT_EQ(a.draw_counter, 2u);
  EXPECT_EQ(next, draw_batch(b, 64));
}

TEST(DrawBatch, ZeroDistributionFallsBackToUniform) {
  auto s = sampler_with(Strategy::kBoost);
  s.probabilities = {0.0, 0.0, 0.0, 0.0};
  std::vector<std::size_t> counts(4, 0);
  for (auto idx : draw_batch(s, 40000)) ++counts[idx];
  EXPECT_EQ(s.degenerate_events, 1u);
  for (auto c : counts) EXPECT_NEAR(c / 40000.0, 0.25, 0.02);
}

TEST(DrawBatch, ZeroBatchThrows) {
  auto s = sampler_with(Strategy::kBoost);
  s.probabilities = {1.0};
  EXPECT_THROW(draw_batch(s, 0), InvalidParameter);
}

TEST(EpochResample, RandomIsUniform) {
  const Dataset d = make_blobs({30, 10}, 2, 2.0, 1);
  auto s = sampler_with(Strategy::kRandom);
  epoch_resample(s, ClassifierModel::init(2, 4, 2, 1), d, odin_for(d));
  for (double p : s.probabilities) EXPECT_DOUBLE_EQ(p, 1.0 / 40.0);
}

TEST(EpochResample, StratifiedBalancesClasses) {
  const Dataset d = make_blobs({90, 10}, 2, 2.0, 1);
  auto s = sampler_with(Strategy::kStratified);
  epoch_resample(s, ClassifierModel::init(2, 4, 2, 1), d, odin_for(d));
  // weights 1/90 and 1/10, normalized by 90/90 + 10/10 = 2
  EXPECT_NEAR(s.probabilities[0], 1.0 / 180.0, 1e-15);
  EXPECT_NEAR(s.probabilities[95], 1.0 / 20.0, 1e-15);
}

TEST(EpochResample, BoostWithConstantModelIsUniform) {
  const Dataset d = make_blobs({20, 5, 7}, 3, 2.0, 2);
  for (auto w : {WeightClass::kPredicted, WeightClass::kTrueLabel}) {
    auto s = sampler_with(Strategy::kBoost, w);
    epoch_resample(s, ClassifierModel::zeros(3, 4, 3), d, odin_for(d));
    for (double p : s.probabilities) EXPECT_NEAR(p, 1.0 / 32.0, 1e-15);
  }
}

TEST(EpochResample, DistributionsStayValidForEveryStrategy) {
  const Dataset d = make_blobs({60, 15, 5}, 2, 2.5, 4);
  auto m = ClassifierModel::init(2, 6, 3, 5);
  const auto rows = testing_support::all_rows(d.size());
  for (auto strat : {Strategy::kBoost, Strategy::kRandom, Strategy::kDynamicRandom,
                     Strategy::kStratified, Strategy::kDynamicStratified}) {
    auto s = sampler_with(strat);
    for (std::size_t epoch = 0; epoch < 6; ++epoch) {
      epoch_resample(s, m, d, odin_for(d, 1.0 + 10.0 * epoch));
      ASSERT_NEAR(sum(s.probabilities), 1.0, 1e-9);
      for (double p : s.probabilities) ASSERT_GE(p, 0.0);
      ASSERT_EQ(s.history.size(), epoch + 1);
      (void)draw_epoch(s, d.size());
      train_step(m, d.features, d.labels, rows, 0.3);
    }
  }
}

TEST(EpochResample, BoostUpliftsMinorityClass) {
  const Dataset d = make_blobs({450, 50}, 2, 2.0, 6);
  const auto model = majority_confident_model(d);
  for (auto w : {WeightClass::kTrueLabel, WeightClass::kPredicted}) {
    auto s = sampler_with(Strategy::kBoost, w, 77);
    epoch_resample(s, model, d, odin_for(d));
    std::size_t minority = 0;
    const auto draws = draw_batch(s, 20000);
    for (auto idx : draws) minority += d.labels[idx] == 1 ? 1 : 0;
    EXPECT_GT(static_cast<double>(minority) / draws.size(), 0.1) << to_string(w);
  }
}

TEST(EpochResample, HistoryIsAppendOnly) {
  const Dataset d = make_blobs({20, 20}, 2, 2.0, 8);
  auto m = ClassifierModel::init(2, 4, 2, 8);
  auto s = sampler_with(Strategy::kBoost);
  epoch_resample(s, m, d, odin_for(d));
  (void)draw_epoch(s, d.size());
  const auto first = s.history.front();
  const auto rows = testing_support::all_rows(d.size());
  train_step(m, d.features, d.labels, rows, 0.5);
  epoch_resample(s, m, d, odin_for(d, 5.0));
  ASSERT_EQ(s.history.size(), 2u);
  const auto& kept = s.history.front();
  EXPECT_EQ(kept.epoch, first.epoch);
  EXPECT_EQ(kept.temperature, first.temperature);
  for (std::size_t i = 0; i < first.samples.size(); ++i) {
    EXPECT_EQ(kept.samples[i].calibrated_score, first.samples[i].calibrated_score);
    EXPECT_EQ(kept.samples[i].times_drawn, first.samples[i].times_drawn);
    EXPECT_EQ(kept.samples[i].sampling_probability, first.samples[i].sampling_probability);
  }
  std::size_t drawn = 0;
  for (const auto& r : kept.samples) drawn += r.times_drawn;
  EXPECT_EQ(drawn, d.size());
}

TEST(EpochResample, CallerModelUnchanged) {
  const Dataset d = make_blobs({25, 10}, 2, 2.0, 9);
  const auto m = ClassifierModel::init(2, 5, 2, 9);
  const auto copy = m;
  for (auto strat : {Strategy::kBoost, Strategy::kRandom, Strategy::kStratified}) {
    auto s = sampler_with(strat);
    epoch_resample(s, m, d, odin_for(d));
    EXPECT_EQ(m, copy);
  }
}

TEST(EpochResample, ClassCountMismatchThrows) {
  const Dataset d = make_blobs({5, 5}, 2, 2.0, 1);
  auto s = sampler_with(Strategy::kBoost);
  EXPECT_THROW(epoch_resample(s, ClassifierModel::zeros(2, 2, 3), d, odin_for(d)), ShapeError);
}

TEST(DrawEpoch, StaticStrategiesFreezeSelection) {
  const Dataset d = make_blobs({15, 15}, 2, 2.0, 3);
  const auto m = ClassifierModel::init(2, 4, 2, 3);
  auto fixed = sampler_with(Strategy::kRandom);
  auto dyn = sampler_with(Strategy::kDynamicRandom);
  epoch_resample(fixed, m, d, odin_for(d));
  epoch_resample(dyn, m, d, odin_for(d));
  const auto a0 = draw_epoch(fixed, d.size());
  const auto b0 = draw_epoch(dyn, d.size());
  epoch_resample(fixed, m, d, odin_for(d));
  epoch_resample(dyn, m, d, odin_for(d));
  EXPECT_EQ(draw_epoch(fixed, d.size()), a0);
  EXPECT_NE(draw_epoch(dyn, d.size()), b0);
}

TEST(EpochResample, RecencyPenaltyDownweightsDrawnSamples) {
  const Dataset d = make_blobs({20, 20}, 2, 2.0, 10);
  const auto m = ClassifierModel::init(2, 4, 2, 10);
  SamplerOptions o;
  o.recency_penalty = 0.5;
  auto with = make_sampler(o, 4);
  auto without = make_sampler(SamplerOptions{}, 4);
  for (auto* s : {&with, &without}) {
    epoch_resample(*s, m, d, odin_for(d));
    (void)draw_batch(*s, 5);
    epoch_resample(*s, m, d, odin_for(d));
  }
  const auto& prev = with.history.front().samples;
  for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
    for (std::size_t j = i + 1; j < prev.size(); ++j) {
      if (prev[i].times_drawn > 0 && prev[j].times_drawn == 0) {
        const double ratio_with = with.probabilities[i] / with.probabilities[j];
        const double ratio_without = without.probabilities[i] / without.probabilities[j];
        EXPECT_NEAR(ratio_with, 0.5 * ratio_without, 1e-12);
      }
    }
  }
  o.recency_penalty = 0.0;
  EXPECT_THROW(make_sampler(o, 1), InvalidParameter);
}

TEST(Strategies, NamesRoundTrip) {
  for (auto s : {Strategy::kBoost, Strategy::kRandom, Strategy::kDynamicRandom,
                 Strategy::kStratified, Strategy::kDynamicStratified}) {
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_strategy("smote"), ConfigError);
  EXPECT_EQ(parse_weight_class("predicted"), WeightClass::kPredicted);
}
