#include "biaslab/calibration.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biaslab/error.h"

namespace biaslab {

void OdinConfig::validate() const {
  if (!(temperature >= 1.0 && temperature <= 1000.0)) {
    throw InvalidParameter("temperature must lie in [1, 1000], got " + std::to_string(temperature));
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidParameter("epsilon must be a finite non-negative value");
  }
  for (double s : grad_std) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidParameter("grad_std entries must be finite and positive");
    }
  }
}

std::vector<double> ts_softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidParameter("softmax temperature must be positive");
  }
  if (logits.empty()) throw EmptyInput("softmax of an empty logit vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericOverflow("non-finite logit");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> perturb(std::span<const double> x, std::span<const double> grad,
                            const OdinConfig& config) {
  if (x.size() != grad.size()) throw ShapeError("input and gradient lengths differ");
  if (!config.grad_std.empty() && config.grad_std.size() != x.size()) {
    throw ShapeError("grad_std length differs from the input length");
  }
  const double direction =
      config.perturbation_sign == PerturbationSign::kAsWritten ? -1.0 : 1.0;
  std::vector<double> out(x.begin(), x.end());
  if (config.epsilon == 0.0) return out;
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (!std::isfinite(grad[f])) throw NumericOverflow("non-finite gradient entry");
    const double sign = grad[f] > 0.0 ? 1.0 : (grad[f] < 0.0 ? -1.0 : 0.0);
    const double std_f = config.grad_std.empty() ? 1.0 : config.grad_std[f];
    out[f] += direction * config.epsilon * sign / std_f;
  }
  return out;
}

CalibratedScore calibrate_sample(const ClassifierModel& model, std::span<const double> x,
                                 const OdinConfig& config, std::size_t sample_id) {
  const LogitVector first = forward(model, x);
  const auto first_profile = ts_softmax(first, config.temperature);
  const auto top = static_cast<std::size_t>(
      std::max_element(first_profile.begin(), first_profile.end()) - first_profile.begin());

  CalibratedScore score;
  score.sample_id = sample_id;
  if (config.epsilon == 0.0) {
    score.logits = first;
    score.softmax_profile = first_profile;
  } else {
    const auto grad = input_gradient(model, x, ScoreTarget{top, config.temperature});
    const auto x_adv = perturb(x, grad, config);
    score.logits = forward(model, x_adv);
    score.softmax_profile = ts_softmax(score.logits, config.temperature);
  }
  const auto best = std::max_element(score.softmax_profile.begin(), score.softmax_profile.end());
  score.max_class = static_cast<std::size_t>(best - score.softmax_profile.begin());
  score.max_score = *best;
  return score;
}

std::vector<CalibratedScore> calibrate_batch(const ClassifierModel& model, const Matrix& features,
                                             std::span<const std::size_t> rows,
                                             const OdinConfig& config) {
  if (rows.empty()) throw EmptyInput("calibration batch is empty");
  config.validate();
  std::vector<CalibratedScore> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= features.rows) throw ShapeError("calibration row index out of range");
    out.push_back(calibrate_sample(model, features.row(r), config, r));
  }
  return out;
}

std::vector<CalibratedScore> calibrate_batch(const ClassifierModel& model, const Matrix& features,
                                             const OdinConfig& config) {
  std::vector<std::size_t> rows(features.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return calibrate_batch(model, features, rows, config);
}

double entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace biaslab
