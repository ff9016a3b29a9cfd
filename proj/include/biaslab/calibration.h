#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "biaslab/matrix.h"
#include "biaslab/model.h"

namespace biaslab {

/// Direction of the gradient-sign step.
enum class PerturbationSign {
  kAsWritten,   // x - eps * sign(grad) / std  (lowers the target score)
  kOdinClassic  // x + eps * sign(grad) / std  (raises the target score)
};

struct OdinConfig {
  double temperature = 1.0;          // [1, 1000]
  double epsilon = 0.05;             // >= 0
  std::vector<double> grad_std;      // per feature, > 0
  PerturbationSign perturbation_sign = PerturbationSign::kAsWritten;

  /// Throws InvalidParameter when a field violates its range.
  void validate() const;
};

/// Second-pass (perturbed-input) scores for one sample.
struct CalibratedScore {
  std::size_t sample_id = 0;
  std::vector<double> softmax_profile;
  std::size_t max_class = 0;
  double max_score = 0.0;
  LogitVector logits;  // logits of the perturbed input
};

/// Temperature-scaled softmax exp(z_c/T) / sum_j exp(z_j/T), computed with
/// max subtraction.
std::vector<double> ts_softmax(std::span<const double> logits, double temperature);

/// Gradient-sign step: x -/+ epsilon * sign(grad) / grad_std elementwise.
std::vector<double> perturb(std::span<const double> x, std::span<const double> grad,
                            const OdinConfig& config);

/// Score, perturb along the max-class score gradient, and rescore one input.
CalibratedScore calibrate_sample(const ClassifierModel& model, std::span<const double> x,
                                 const OdinConfig& config, std::size_t sample_id = 0);

/// calibrate_sample over the given rows of `features`; sample_id is the row.
std::vector<CalibratedScore> calibrate_batch(const ClassifierModel& model, const Matrix& features,
                                             std::span<const std::size_t> rows,
                                             const OdinConfig& config);

/// calibrate_batch over every row.
std::vector<CalibratedScore> calibrate_batch(const ClassifierModel& model, const Matrix& features,
                                             const OdinConfig& config);

/// Shannon entropy (nats) of a probability vector.
double entropy(std::span<const double> probabilities);

}  // namespace biaslab
