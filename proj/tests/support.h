#pragma once

#include <cstdint>
#include <vector>

#include "biaslab/data.h"
#include "biaslab/model.h"
#include "biaslab/rng.h"

namespace testing_support {

/// Model with every parameter uniform in [-scale, scale].
inline biaslab::ClassifierModel random_model(biaslab::Rng& rng, std::size_t features,
                                             std::size_t hidden, std::size_t classes,
                                             double scale = 1.0) {
  auto m = biaslab::ClassifierModel::zeros(features, hidden, classes);
  for (double& v : m.weights_hidden.data) v = rng.uniform(-scale, scale);
  for (double& v : m.bias_hidden) v = rng.uniform(-scale, scale);
  for (double& v : m.weights_out.data) v = rng.uniform(-scale, scale);
  for (double& v : m.bias_out) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(biaslab::Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.uniform(-scale, scale);
  return v;
}

/// 1 feature, 1 hidden unit, 2 classes with hand-picked weights.
inline biaslab::ClassifierModel toy_model() {
  auto m = biaslab::ClassifierModel::zeros(1, 1, 2);
  m.weights_hidden(0, 0) = 0.7;
  m.bias_hidden[0] = -0.2;
  m.weights_out(0, 0) = 1.5;
  m.weights_out(1, 0) = -0.5;
  m.bias_out = {0.1, 0.3};
  return m;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace testing_support
