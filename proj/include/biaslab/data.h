#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biaslab/matrix.h"

namespace biaslab {

enum class Split { kTrain, kTest };

/// Labeled feature matrix. Immutable once built.
struct Dataset {
  Matrix features;                      // [n x d]
  std::vector<int> labels;              // [n], each in [0, num_classes)
  std::size_t num_classes = 0;
  std::vector<std::size_t> class_counts;
  std::vector<double> feature_std;      // from the train split, > 0
  Split split = Split::kTrain;
  std::vector<std::string> class_names; // index -> original label text

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return features.cols; }

  /// Row indices of every sample with the given label, ascending.
  std::vector<std::size_t> rows_of_class(int label) const;
};

struct FeatureStd {
  std::vector<double> values;
  std::vector<std::size_t> replaced;  // columns whose zero std was set to 1
};

/// Per-feature population standard deviation; zero entries become 1.
/// Throws InsufficientData with fewer than two samples.
FeatureStd compute_feature_std(const Matrix& features);
FeatureStd compute_feature_std(const Dataset& train);

/// Recounts classes and recomputes feature_std from the data itself.
void finalize(Dataset& dataset);

/// Isotropic unit-variance Gaussian blobs, one per class.
///
/// Centers: for d >= K the class-k center is (separation / sqrt 2) * e_k, so
/// every pair of centers is `separation` apart. With fewer dimensions the
/// centers sit on a line (d = 1) or on a circle in the first two coordinates
/// with adjacent centers `separation` apart.
Dataset make_blobs(const std::vector<std::size_t>& n_per_class, std::size_t dims,
                   double separation, std::uint64_t seed, Split split = Split::kTrain);

struct ParetoTailSpec {
  /// Curve exponent offset; the tail exponent is base_shape * (1 + scale).
  /// scale = 0 is the steepest of the customary settings {-0.5, -0.2, 0};
  /// scale = -1 is a flat curve.
  double scale = 0.0;
  /// Count kept by the top-ranked class; defaults to the largest class count.
  std::optional<std::size_t> anchor;
  std::uint64_t rng_seed = 0;
  double base_shape = 2.0;
};

/// Target count per rank: max(1, round(anchor * (1 + rank)^-(base_shape * (1 + scale)))).
std::vector<std::size_t> pareto_target_counts(std::size_t num_ranks, const ParetoTailSpec& spec,
                                              std::size_t anchor);

/// Long-tail resampling: classes ranked by count (descending, ties by index)
/// are brought to the Pareto target of their rank. Surplus classes are
/// subsampled without replacement, deficit classes keep every sample and are
/// topped up with draws (with replacement) from their own samples.
Dataset pareto_resample(const Dataset& dataset, const ParetoTailSpec& spec);

/// Header row, one label column, remaining columns numeric features.
/// Class indices follow the lexicographic order of the label strings.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Writes features with shortest round-trip formatting and the label column last.
void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& label_column);

}  // namespace biaslab
