#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace biaslab {

struct PredictionEntry {
  std::size_t sample_id = 0;
  int true_label = 0;
  int predicted_label = 0;
  std::vector<double> softmax_profile;
};

struct PredictionLog {
  std::size_t num_classes = 0;
  std::vector<PredictionEntry> entries;

  std::size_t size() const { return entries.size(); }
  /// Throws on out-of-range labels or profiles of the wrong length.
  void validate() const;
};

/// Correct predictions are in-distribution, mismatches out-of-distribution.
/// Counts are keyed by true label.
struct OodPartition {
  std::vector<std::size_t> id_counts;
  std::vector<std::size_t> ood_counts;
};

OodPartition recategorize(const PredictionLog& log);

/// sum_i 1(y_i=c) 1(yhat_i=c) S_{i,c}  /  sum_i (1(y_i=c) + 1(y_i!=c)).
/// The denominator is kept in its printed form; it always equals n.
double sodc_per_class(const PredictionLog& log, std::size_t c);

/// Product of the per-class values.
double sodc_total(std::span<const double> per_class);

/// Mean absolute deviation of per-class values from their mean.
double mab(std::span<const double> per_class_metric);

/// Population standard deviation (divisor N_c) of per-class values.
double sdb(std::span<const double> per_class_metric);

struct ClassMetrics {
  double accuracy = 0.0;  // within-class hit rate
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double sodc = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  bool precision_undefined = false;  // nothing predicted as this class
};

struct AggregateMetrics {
  double accuracy = 0.0;  // fraction of all samples classified correctly
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double sodc_total = 0.0;
};

struct BiasPair {
  double mab = 0.0;
  double sdb = 0.0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  AggregateMetrics aggregate;
  std::map<std::string, BiasPair> bias;  // accuracy, f1, precision, recall, sodc
  OodPartition ood_partition;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  std::vector<double> column(const std::string& metric) const;
};

/// Per-class one-vs-rest precision/recall/F1 and within-class accuracy plus
/// unweighted macro averages. SODC fields are left at zero.
MetricsReport classification_metrics(const PredictionLog& log);

/// classification_metrics plus SODC, bias pairs for every metric and the
/// ID/OOD partition.
MetricsReport build_report(const PredictionLog& log);

}  // namespace biaslab
