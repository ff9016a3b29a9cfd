#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "biaslab/matrix.h"

namespace biaslab {

using LogitVector = std::vector<double>;

/// One-hidden-layer feedforward classifier: x -> tanh(W1 x + b1) -> W2 h + b2.
///
/// Stands in for a full image backbone; everything downstream only needs
/// logits, the hidden embedding and input gradients.
struct ClassifierModel {
  Matrix weights_hidden;             // [hidden x features]
  std::vector<double> bias_hidden;   // [hidden]
  Matrix weights_out;                // [classes x hidden]
  std::vector<double> bias_out;      // [classes]

  std::size_t num_features() const { return weights_hidden.cols; }
  std::size_t num_hidden() const { return weights_hidden.rows; }
  std::size_t num_classes() const { return weights_out.rows; }

  /// All parameters zero; the model outputs constant zero logits.
  static ClassifierModel zeros(std::size_t features, std::size_t hidden, std::size_t classes);

  /// Entries drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ClassifierModel init(std::size_t features, std::size_t hidden, std::size_t classes,
                              std::uint64_t seed);

  /// Throws NumericOverflow if any parameter is non-finite.
  void check_finite() const;

  bool operator==(const ClassifierModel&) const = default;
};

/// Intermediate values of one forward pass, reused by the backward passes.
struct ForwardTrace {
  std::vector<double> hidden;  // post-activation
  LogitVector logits;
};

ForwardTrace forward_trace(const ClassifierModel& model, std::span<const double> x);

/// Logits for a single input. Throws ShapeError on a dimension mismatch.
LogitVector forward(const ClassifierModel& model, std::span<const double> x);

/// Hidden-layer activations, exported as embeddings.
std::vector<double> embed(const ClassifierModel& model, std::span<const double> x);

/// Selects the scalar differentiated by input_gradient: the temperature-scaled
/// softmax probability of `class_index`.
struct ScoreTarget {
  std::size_t class_index = 0;
  double temperature = 1.0;
};

/// Analytic gradient of S_target(x; T) with respect to x.
std::vector<double> input_gradient(const ClassifierModel& model, std::span<const double> x,
                                   const ScoreTarget& target);

/// Parameter gradients, laid out like ClassifierModel.
struct ModelGradient {
  Matrix weights_hidden;
  std::vector<double> bias_hidden;
  Matrix weights_out;
  std::vector<double> bias_out;
};

struct LossAndGradient {
  double loss = 0.0;
  ModelGradient gradient;
};

/// Mean cross-entropy over the selected rows and its parameter gradient.
LossAndGradient cross_entropy_gradient(const ClassifierModel& model, const Matrix& features,
                                       std::span<const int> labels,
                                       std::span<const std::size_t> rows);

/// Mean cross-entropy without the gradient.
double cross_entropy(const ClassifierModel& model, const Matrix& features,
                     std::span<const int> labels, std::span<const std::size_t> rows);

/// One plain gradient-descent step on the batch `rows`. Returns the batch
/// loss evaluated before the update.
double train_step(ClassifierModel& model, const Matrix& features, std::span<const int> labels,
                  std::span<const std::size_t> rows, double learning_rate);

/// Flat JSON checkpoint: layer name -> row-major arrays plus the shape.
std::string model_to_json(const ClassifierModel& model);
ClassifierModel model_from_json(const std::string& text);

}  // namespace biaslab
