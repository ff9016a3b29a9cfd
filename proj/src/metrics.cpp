#include "biaslab/metrics.h"

#include <cmath>
#include <numeric>

#include "biaslab/error.h"

namespace biaslab {

namespace {

// Shifted by the first entry so a constant column has an exact mean.
double mean_of(std::span<const double> v) {
  double total = 0.0;
  for (double x : v) total += x - v[0];
  return v[0] + total / static_cast<double>(v.size());
}

}  // namespace

void PredictionLog::validate() const {
  for (const auto& e : entries) {
    if (e.true_label < 0 || static_cast<std::size_t>(e.true_label) >= num_classes ||
        e.predicted_label < 0 || static_cast<std::size_t>(e.predicted_label) >= num_classes) {
      throw InvalidParameter("prediction log label outside [0, num_classes)");
    }
    if (e.softmax_profile.size() != num_classes) {
      throw ShapeError("prediction log profile length differs from num_classes");
    }
  }
}

OodPartition recategorize(const PredictionLog& log) {
  log.validate();
  OodPartition out;
  out.id_counts.assign(log.num_classes, 0);
  out.ood_counts.assign(log.num_classes, 0);
  for (const auto& e : log.entries) {
    auto& bucket = e.true_label == e.predicted_label ? out.id_counts : out.ood_counts;
    ++bucket[static_cast<std::size_t>(e.true_label)];
  }
  return out;
}

double sodc_per_class(const PredictionLog& log, std::size_t c) {
  if (log.entries.empty()) throw EmptyInput("SODC of an empty prediction log");
  if (c >= log.num_classes) throw InvalidParameter("SODC class index out of range");
  const int cls = static_cast<int>(c);
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& e : log.entries) {
    if (e.true_label == cls && e.predicted_label == cls) numerator += e.softmax_profile[c];
    denominator += (e.true_label == cls ? 1.0 : 0.0) + (e.true_label != cls ? 1.0 : 0.0);
  }
  return numerator / denominator;
}

double sodc_total(std::span<const double> per_class) {
  double product = 1.0;
  for (double s : per_class) product *= s;
  return product;
}

double mab(std::span<const double> per_class_metric) {
  if (per_class_metric.empty()) throw EmptyInput("MAB needs at least one class");
  const double m = mean_of(per_class_metric);
  double total = 0.0;
  for (double v : per_class_metric) total += std::abs(v - m);
  return total / static_cast<double>(per_class_metric.size());
}

double sdb(std::span<const double> per_class_metric) {
  if (per_class_metric.empty()) throw EmptyInput("SDB needs at least one class");
  const double m = mean_of(per_class_metric);
  double total = 0.0;
  for (double v : per_class_metric) total += (v - m) * (v - m);
  return std::sqrt(total / static_cast<double>(per_class_metric.size()));
}

std::vector<double> MetricsReport::column(const std::string& metric) const {
  std::vector<double> out;
  out.reserve(per_class.size());
  for (const auto& m : per_class) {
    if (metric == "accuracy") out.push_back(m.accuracy);
    else if (metric == "precision") out.push_back(m.precision);
    else if (metric == "recall") out.push_back(m.recall);
    else if (metric == "f1") out.push_back(m.f1);
    else if (metric == "sodc") out.push_back(m.sodc);
    else throw InvalidParameter("unknown metric '" + metric + "'");
  }
  return out;
}

MetricsReport classification_metrics(const PredictionLog& log) {
  if (log.entries.empty()) throw EmptyInput("metrics of an empty prediction log");
  log.validate();
  const std::size_t k = log.num_classes;
  MetricsReport report;
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (const auto& e : log.entries) {
    ++report.confusion[static_cast<std::size_t>(e.true_label)]
                      [static_cast<std::size_t>(e.predicted_label)];
    if (e.true_label == e.predicted_label) ++correct;
  }

  report.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics& m = report.per_class[c];
    const std::size_t tp = report.confusion[c][c];
    for (std::size_t j = 0; j < k; ++j) {
      m.support += report.confusion[c][j];
      m.predicted += report.confusion[j][c];
    }
    m.recall = m.support > 0 ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.accuracy = m.recall;
    m.precision_undefined = m.predicted == 0;
    m.precision =
        m.predicted > 0 ? static_cast<double>(tp) / static_cast<double>(m.predicted) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }

  AggregateMetrics& agg = report.aggregate;
  agg.accuracy = static_cast<double>(correct) / static_cast<double>(log.size());
  const auto kd = static_cast<double>(k);
  for (const auto& m : report.per_class) {
    agg.macro_f1 += m.f1 / kd;
    agg.macro_precision += m.precision / kd;
    agg.macro_recall += m.recall / kd;
  }
  return report;
}

MetricsReport build_report(const PredictionLog& log) {
  MetricsReport report = classification_metrics(log);
  std::vector<double> sodc(log.num_classes);
  for (std::size_t c = 0; c < log.num_classes; ++c) {
    sodc[c] = sodc_per_class(log, c);
    report.per_class[c].sodc = sodc[c];
  }
  report.aggregate.sodc_total = sodc_total(sodc);
  for (const char* metric : {"accuracy", "f1", "precision", "recall", "sodc"}) {
    const auto values = report.column(metric);
    report.bias[metric] = BiasPair{mab(values), sdb(values)};
  }
  report.ood_partition = recategorize(log);
  return report;
}

}  // namespace biaslab
