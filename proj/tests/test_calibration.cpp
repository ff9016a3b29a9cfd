#include "biaslab/calibration.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "biaslab/error.h"
#include "oracles.h"
#include "support.h"

using namespace biaslab;
using testing_support::random_model;
using testing_support::toy_model;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

OdinConfig odin(double t, double eps, std::vector<double> std_dev = {}) {
  OdinConfig c;
  c.temperature = t;
  c.epsilon = eps;
  c.grad_std = std::move(std_dev);
  return c;
}

}  // namespace

TEST(TsSoftmax, SymmetricLogits) {
  const std::vector<double> z{0.0, 0.0};
  const auto p = ts_softmax(z, 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(TsSoftmax, AnalyticExponentials) {
  const std::vector<double> z{std::numbers::ln2, 0.0};
  const auto p = ts_softmax(z, 1.0);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
}

TEST(TsSoftmax, HighTemperatureMatchesHighPrecisionOracle) {
  const std::vector<double> z{10.0, 0.0};
  const auto expected = oracle::softmax_ld(z, 1000.0L);
  // oracle: exp(0.01) / (exp(0.01) + 1) = 0.50249997916...
  EXPECT_NEAR(static_cast<double>(expected[0]), 0.502500, 1e-5);
  const auto p = ts_softmax(z, 1000.0);
  EXPECT_NEAR(p[0], static_cast<double>(expected[0]), 1e-15);
  EXPECT_NEAR(p[1], 0.497500, 1e-5);
}

TEST(TsSoftmax, RejectsNonPositiveTemperature) {
  const std::vector<double> z{1.0, 2.0};
  EXPECT_THROW(ts_softmax(z, 0.0), InvalidParameter);
  EXPECT_THROW(ts_softmax(z, -1.0), InvalidParameter);
}

TEST(TsSoftmax, LargeLogitsDoNotOverflow) {
  const std::vector<double> z{1000.0, 999.0, -1000.0};
  const auto p = ts_softmax(z, 1.0);
  for (double v : p) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(sum(p), 1.0, 1e-12);
}

TEST(TsSoftmax, NormalizationAndTemperatureProperties) {
  Rng rng(31);
  const double temps[] = {1.0, 2.0, 5.0, 50.0, 1000.0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto z = testing_support::random_vector(rng, 2 + rng.below(6), 20.0);
    double prev_entropy = -1.0;
    const auto argmax0 = std::max_element(z.begin(), z.end()) - z.begin();
    for (double t : temps) {
      const auto p = ts_softmax(z, t);
      ASSERT_NEAR(sum(p), 1.0, 1e-9);
      const double h = entropy(p);
      ASSERT_GE(h, prev_entropy - 1e-12) << "entropy decreased at T=" << t;
      prev_entropy = h;
      ASSERT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), argmax0);
    }
    // T = 1 against the textbook formula.
    std::vector<double> plain(z.size());
    double total = 0.0;
    const double top = *std::max_element(z.begin(), z.end());
    for (std::size_t i = 0; i < z.size(); ++i) total += (plain[i] = std::exp(z[i] - top));
    const auto p1 = ts_softmax(z, 1.0);
    for (std::size_t i = 0; i < z.size(); ++i) ASSERT_NEAR(p1[i], plain[i] / total, 1e-12);
  }
}

TEST(Perturb, ZeroEpsilonIsIdentity) {
  const std::vector<double> x{0.2, 0.7}, g{2.0, -3.0};
  EXPECT_EQ(perturb(x, g, odin(1.0, 0.0, {1.0, 1.0})), x);
}

TEST(Perturb, SignArithmeticAsWritten) {
  const std::vector<double> x{0.2, 0.7}, g{2.0, -3.0};
  const auto out = perturb(x, g, odin(1.0, 0.05, {1.0, 1.0}));
  EXPECT_NEAR(out[0], 0.15, 1e-15);
  EXPECT_NEAR(out[1], 0.75, 1e-15);
}

TEST(Perturb, StdScalingAfterSign) {
  const std::vector<double> x{0.2}, g{2.0};
  // 0.2 - 0.05 * 1 / 0.5
  EXPECT_NEAR(perturb(x, g, odin(1.0, 0.05, {0.5}))[0], 0.1, 1e-15);
}

TEST(Perturb, OdinClassicAddsStep) {
  const std::vector<double> x{0.2, 0.7}, g{2.0, -3.0};
  auto c = odin(1.0, 0.05, {1.0, 1.0});
  c.perturbation_sign = PerturbationSign::kOdinClassic;
  const auto out = perturb(x, g, c);
  EXPECT_NEAR(out[0], 0.25, 1e-15);
  EXPECT_NEAR(out[1], 0.65, 1e-15);
}

TEST(Perturb, LengthMismatchThrows) {
  const std::vector<double> x{0.2, 0.7}, g{2.0};
  EXPECT_THROW(perturb(x, g, odin(1.0, 0.05)), ShapeError);
}

TEST(OdinConfigTest, Validation) {
  EXPECT_NO_THROW(odin(1.0, 0.05, {1.0}).validate());
  EXPECT_NO_THROW(odin(1000.0, 0.0).validate());
  EXPECT_THROW(odin(0.5, 0.05).validate(), InvalidParameter);
  EXPECT_THROW(odin(1001.0, 0.05).validate(), InvalidParameter);
  EXPECT_THROW(odin(2.0, -0.1).validate(), InvalidParameter);
  EXPECT_THROW(odin(2.0, 0.05, {1.0, 0.0}).validate(), InvalidParameter);
}

TEST(CalibrateBatch, ZeroEpsilonEqualsUnperturbedProfile) {
  Rng rng(4);
  const auto m = random_model(rng, 3, 4, 3);
  Matrix feats(5, 3);
  for (double& v : feats.data) v = rng.uniform(-1.0, 1.0);
  const auto scores = calibrate_batch(m, feats, odin(5.0, 0.0, {1.0, 1.0, 1.0}));
  ASSERT_EQ(scores.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(scores[i].sample_id, i);
    EXPECT_EQ(scores[i].softmax_profile, ts_softmax(forward(m, feats.row(i)), 5.0));
  }
}

TEST(CalibrateBatch, ConstantModelGivesUniformProfile) {
  const auto m = ClassifierModel::zeros(2, 3, 4);
  Matrix feats(3, 2, 0.7);
  for (const auto& s : calibrate_batch(m, feats, odin(1.0, 0.05, {1.0, 1.0}))) {
    for (double p : s.softmax_profile) EXPECT_DOUBLE_EQ(p, 0.25);
    EXPECT_DOUBLE_EQ(s.max_score, 0.25);
  }
}

TEST(CalibrateBatch, AsWrittenStepDoesNotRaiseTopScore) {
  const auto m = toy_model();
  for (double x0 : {-2.0, -0.3, 0.4, 1.7}) {
    for (double eps : {1e-4, 5e-4, 1e-3}) {
      const std::vector<double> x{x0};
      const auto first = ts_softmax(forward(m, x), 1.0);
      const double first_max = *std::max_element(first.begin(), first.end());
      const auto second = calibrate_sample(m, x, odin(1.0, eps, {1.0}));
      EXPECT_LE(second.max_score, first_max + 1e-6) << "x=" << x0 << " eps=" << eps;
    }
  }
}

TEST(CalibrateBatch, ProfileInvariants) {
  Rng rng(12);
  const auto m = random_model(rng, 2, 5, 3, 2.0);
  Matrix feats(40, 2);
  for (double& v : feats.data) v = rng.uniform(-3.0, 3.0);
  for (const auto& s : calibrate_batch(m, feats, odin(2.0, 0.05, {0.8, 1.3}))) {
    EXPECT_NEAR(sum(s.softmax_profile), 1.0, 1e-9);
    EXPECT_EQ(s.max_score, s.softmax_profile[s.max_class]);
    EXPECT_EQ(s.max_score, *std::max_element(s.softmax_profile.begin(), s.softmax_profile.end()));
    EXPECT_EQ(s.logits.size(), 3u);
  }
}

TEST(CalibrateBatch, LeavesModelUnchanged) {
  Rng rng(13);
  const auto m = random_model(rng, 2, 3, 2);
  const auto copy = m;
  Matrix feats(10, 2, 0.3);
  (void)calibrate_batch(m, feats, odin(10.0, 0.05, {1.0, 1.0}));
  EXPECT_EQ(m, copy);
}

TEST(CalibrateBatch, EmptyBatchThrows) {
  const auto m = toy_model();
  Matrix feats(0, 1);
  EXPECT_THROW(calibrate_batch(m, feats, odin(1.0, 0.05)), EmptyInput);
}
