#include "biaslab/model.h"

#include <cmath>
#include "json.hpp"

#include "biaslab/calibration.h"
#include "biaslab/error.h"
#include "biaslab/rng.h"

namespace biaslab {

namespace {

void require_input(const ClassifierModel& model, std::span<const double> x) {
  if (x.size() != model.num_features()) {
    throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(model.num_features()));
  }
}

bool all_finite(std::span<const double> v) {
  for (double e : v) {
    if (!std::isfinite(e)) return false;
  }
  return true;
}

// Gradient of the cross-entropy of one sample w.r.t. every parameter,
// accumulated with weight `scale` into `grad`. Returns the sample loss.
double accumulate_sample(const ClassifierModel& model, std::span<const double> x, int label,
                         double scale, ModelGradient& grad) {
  const ForwardTrace trace = forward_trace(model, x);
  const auto probs = ts_softmax(trace.logits, 1.0);
  const auto y = static_cast<std::size_t>(label);
  const double loss = -std::log(std::max(probs[y], std::numeric_limits<double>::min()));

  const std::size_t hidden = model.num_hidden();
  const std::size_t classes = model.num_classes();
  const std::size_t features = model.num_features();

  std::vector<double> d_hidden(hidden, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const double d_logit = (probs[c] - (c == y ? 1.0 : 0.0)) * scale;
    grad.bias_out[c] += d_logit;
    for (std::size_t h = 0; h < hidden; ++h) {
      grad.weights_out(c, h) += d_logit * trace.hidden[h];
      d_hidden[h] += d_logit * model.weights_out(c, h);
    }
  }
  for (std::size_t h = 0; h < hidden; ++h) {
    const double d_pre = d_hidden[h] * (1.0 - trace.hidden[h] * trace.hidden[h]);
    grad.bias_hidden[h] += d_pre;
    for (std::size_t f = 0; f < features; ++f) {
      grad.weights_hidden(h, f) += d_pre * x[f];
    }
  }
  return loss;
}

void check_batch(const ClassifierModel& model, const Matrix& features, std::span<const int> labels,
                 std::span<const std::size_t> rows) {
  if (rows.empty()) throw EmptyInput("training batch is empty");
  if (features.cols != model.num_features()) {
    throw ShapeError("feature matrix has " + std::to_string(features.cols) +
                     " columns, model expects " + std::to_string(model.num_features()));
  }
  if (labels.size() != features.rows) throw ShapeError("labels and features disagree in length");
  for (std::size_t r : rows) {
    if (r >= features.rows) throw ShapeError("batch row index out of range");
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= model.num_classes()) {
      throw InvalidParameter("label " + std::to_string(labels[r]) + " outside [0, " +
                             std::to_string(model.num_classes()) + ")");
    }
  }
}

}  // namespace

ClassifierModel ClassifierModel::zeros(std::size_t features, std::size_t hidden,
                                       std::size_t classes) {
  if (features == 0 || hidden == 0 || classes == 0) {
    throw InvalidParameter("model dimensions must be positive");
  }
  return ClassifierModel{Matrix(hidden, features), std::vector<double>(hidden, 0.0),
                         Matrix(classes, hidden), std::vector<double>(classes, 0.0)};
}

ClassifierModel ClassifierModel::init(std::size_t features, std::size_t hidden,
                                      std::size_t classes, std::uint64_t seed) {
  ClassifierModel model = zeros(features, hidden, classes);
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(features));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (double& w : model.weights_hidden.data) w = rng.uniform(-a1, a1);
  for (double& b : model.bias_hidden) b = rng.uniform(-a1, a1);
  for (double& w : model.weights_out.data) w = rng.uniform(-a2, a2);
  for (double& b : model.bias_out) b = rng.uniform(-a2, a2);
  return model;
}

void ClassifierModel::check_finite() const {
  if (!all_finite(weights_hidden.data) || !all_finite(bias_hidden) ||
      !all_finite(weights_out.data) || !all_finite(bias_out)) {
    throw NumericOverflow("model parameters contain non-finite values");
  }
}

ForwardTrace forward_trace(const ClassifierModel& model, std::span<const double> x) {
  require_input(model, x);
  ForwardTrace trace;
  trace.hidden.resize(model.num_hidden());
  for (std::size_t h = 0; h < model.num_hidden(); ++h) {
    double a = model.bias_hidden[h];
    const auto w = model.weights_hidden.row(h);
    for (std::size_t f = 0; f < x.size(); ++f) a += w[f] * x[f];
    trace.hidden[h] = std::tanh(a);
  }
  trace.logits.resize(model.num_classes());
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    double z = model.bias_out[c];
    const auto w = model.weights_out.row(c);
    for (std::size_t h = 0; h < trace.hidden.size(); ++h) z += w[h] * trace.hidden[h];
    trace.logits[c] = z;
  }
  return trace;
}

LogitVector forward(const ClassifierModel& model, std::span<const double> x) {
  return forward_trace(model, x).logits;
}

std::vector<double> embed(const ClassifierModel& model, std::span<const double> x) {
  return forward_trace(model, x).hidden;
}

std::vector<double> input_gradient(const ClassifierModel& model, std::span<const double> x,
                                   const ScoreTarget& target) {
  if (target.class_index >= model.num_classes()) {
    throw InvalidParameter("score target class out of range");
  }
  if (!(target.temperature > 0.0)) throw InvalidParameter("temperature must be positive");

  const ForwardTrace trace = forward_trace(model, x);
  const auto probs = ts_softmax(trace.logits, target.temperature);
  const std::size_t k = target.class_index;

  // dS_k/dz_c = S_k (delta_kc - S_c) / T
  std::vector<double> d_hidden(model.num_hidden(), 0.0);
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const double d_logit = probs[k] * ((c == k ? 1.0 : 0.0) - probs[c]) / target.temperature;
    for (std::size_t h = 0; h < model.num_hidden(); ++h) {
      d_hidden[h] += d_logit * model.weights_out(c, h);
    }
  }
  std::vector<double> grad(model.num_features(), 0.0);
  for (std::size_t h = 0; h < model.num_hidden(); ++h) {
    const double d_pre = d_hidden[h] * (1.0 - trace.hidden[h] * trace.hidden[h]);
    const auto w = model.weights_hidden.row(h);
    for (std::size_t f = 0; f < grad.size(); ++f) grad[f] += d_pre * w[f];
  }
  if (!all_finite(grad)) throw NumericOverflow("input gradient is not finite");
  return grad;
}

LossAndGradient cross_entropy_gradient(const ClassifierModel& model, const Matrix& features,
                                       std::span<const int> labels,
                                       std::span<const std::size_t> rows) {
  check_batch(model, features, labels, rows);
  LossAndGradient out;
  out.gradient = ModelGradient{Matrix(model.num_hidden(), model.num_features()),
                               std::vector<double>(model.num_hidden(), 0.0),
                               Matrix(model.num_classes(), model.num_hidden()),
                               std::vector<double>(model.num_classes(), 0.0)};
  const double scale = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t r : rows) {
    total += accumulate_sample(model, features.row(r), labels[r], scale, out.gradient);
  }
  out.loss = total * scale;
  if (!std::isfinite(out.loss)) throw NumericOverflow("cross-entropy is not finite");
  return out;
}

double cross_entropy(const ClassifierModel& model, const Matrix& features,
                     std::span<const int> labels, std::span<const std::size_t> rows) {
  check_batch(model, features, labels, rows);
  double total = 0.0;
  for (std::size_t r : rows) {
    const auto probs = ts_softmax(forward(model, features.row(r)), 1.0);
    total -= std::log(std::max(probs[static_cast<std::size_t>(labels[r])],
                               std::numeric_limits<double>::min()));
  }
  return total / static_cast<double>(rows.size());
}

double train_step(ClassifierModel& model, const Matrix& features, std::span<const int> labels,
                  std::span<const std::size_t> rows, double learning_rate) {
  if (!(learning_rate >= 0.0)) throw InvalidParameter("learning rate must be non-negative");
  const LossAndGradient lg = cross_entropy_gradient(model, features, labels, rows);
  if (learning_rate == 0.0) return lg.loss;

  auto descend = [learning_rate](std::vector<double>& params, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
  };
  descend(model.weights_hidden.data, lg.gradient.weights_hidden.data);
  descend(model.bias_hidden, lg.gradient.bias_hidden);
  descend(model.weights_out.data, lg.gradient.weights_out.data);
  descend(model.bias_out, lg.gradient.bias_out);
  model.check_finite();
  return lg.loss;
}

std::string model_to_json(const ClassifierModel& model) {
  nlohmann::ordered_json doc;
  doc["activation"] = "tanh";
  doc["features"] = model.num_features();
  doc["hidden"] = model.num_hidden();
  doc["classes"] = model.num_classes();
  doc["weights_hidden"] = model.weights_hidden.data;
  doc["bias_hidden"] = model.bias_hidden;
  doc["weights_out"] = model.weights_out.data;
  doc["bias_out"] = model.bias_out;
  return doc.dump(2);
}

ClassifierModel model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model checkpoint is not valid JSON: ") + e.what(), 0);
  }
  try {
    if (doc.value("activation", std::string("tanh")) != "tanh") {
      throw ConfigError("unsupported activation in checkpoint");
    }
    ClassifierModel model = ClassifierModel::zeros(doc.at("features").get<std::size_t>(),
                                                   doc.at("hidden").get<std::size_t>(),
                                                   doc.at("classes").get<std::size_t>());
    auto load = [&doc](const char* key, std::vector<double>& dst) {
      auto src = doc.at(key).get<std::vector<double>>();
      if (src.size() != dst.size()) {
        throw ShapeError(std::string("checkpoint layer '") + key + "' has wrong size");
      }
      dst = std::move(src);
    };
    load("weights_hidden", model.weights_hidden.data);
    load("bias_hidden", model.bias_hidden);
    load("weights_out", model.weights_out.data);
    load("bias_out", model.bias_out);
    model.check_finite();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model checkpoint: ") + e.what(), 0);
  }
}

}  // namespace biaslab
