#include "biaslab/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "biaslab/error.h"
#include "biaslab/rng.h"

namespace biaslab {

namespace {

std::string class_name(std::size_t index, std::size_t num_classes) {
  const std::size_t width = std::to_string(num_classes > 0 ? num_classes - 1 : 0).size();
  std::string digits = std::to_string(index);
  return "c" + std::string(width - digits.size(), '0') + digits;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::vector<std::size_t> Dataset::rows_of_class(int label) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) rows.push_back(i);
  }
  return rows;
}

FeatureStd compute_feature_std(const Matrix& features) {
  if (features.rows < 2) {
    throw InsufficientData("feature std needs at least 2 samples, got " +
                           std::to_string(features.rows));
  }
  FeatureStd out;
  out.values.assign(features.cols, 0.0);
  const auto n = static_cast<double>(features.rows);
  for (std::size_t f = 0; f < features.cols; ++f) {
    double mean = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) mean += features(r, f);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r) {
      const double d = features(r, f) - mean;
      var += d * d;
    }
    const double s = std::sqrt(var / n);
    if (s > 0.0 && std::isfinite(s)) {
      out.values[f] = s;
    } else {
      out.values[f] = 1.0;
      out.replaced.push_back(f);
    }
  }
  return out;
}

FeatureStd compute_feature_std(const Dataset& train) { return compute_feature_std(train.features); }

void finalize(Dataset& dataset) {
  if (dataset.labels.size() != dataset.features.rows) {
    throw ShapeError("labels and feature rows disagree in length");
  }
  dataset.class_counts.assign(dataset.num_classes, 0);
  for (int y : dataset.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= dataset.num_classes) {
      throw InvalidParameter("label outside [0, num_classes)");
    }
    ++dataset.class_counts[static_cast<std::size_t>(y)];
  }
  if (dataset.class_names.size() != dataset.num_classes) {
    dataset.class_names.clear();
    for (std::size_t k = 0; k < dataset.num_classes; ++k) {
      dataset.class_names.push_back(class_name(k, dataset.num_classes));
    }
  }
  dataset.feature_std = dataset.features.rows >= 2
                            ? compute_feature_std(dataset.features).values
                            : std::vector<double>(dataset.features.cols, 1.0);
}

Dataset make_blobs(const std::vector<std::size_t>& n_per_class, std::size_t dims,
                   double separation, std::uint64_t seed, Split split) {
  if (n_per_class.empty()) throw EmptyInput("make_blobs needs at least one class");
  for (std::size_t n : n_per_class) {
    if (n == 0) throw EmptyInput("make_blobs class count must be at least 1");
  }
  if (dims == 0) throw InvalidParameter("make_blobs needs at least one dimension");
  if (!(separation > 0.0)) throw InvalidParameter("make_blobs separation must be positive");

  const std::size_t k_classes = n_per_class.size();
  Matrix centers(k_classes, dims);
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (dims >= k_classes) {
      centers(k, k) = separation / std::numbers::sqrt2;
    } else if (dims == 1) {
      centers(k, 0) = separation * static_cast<double>(k);
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(k_classes);
      const double radius =
          separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(k_classes)));
      centers(k, 0) = radius * std::cos(angle);
      centers(k, 1) = radius * std::sin(angle);
    }
  }

  const std::size_t n = std::accumulate(n_per_class.begin(), n_per_class.end(), std::size_t{0});
  Dataset out;
  out.features = Matrix(n, dims);
  out.labels.reserve(n);
  out.num_classes = k_classes;
  out.split = split;
  Rng rng(seed);
  std::size_t row = 0;
  for (std::size_t k = 0; k < k_classes; ++k) {
    for (std::size_t i = 0; i < n_per_class[k]; ++i, ++row) {
      for (std::size_t f = 0; f < dims; ++f) out.features(row, f) = centers(k, f) + rng.normal();
      out.labels.push_back(static_cast<int>(k));
    }
  }
  finalize(out);
  return out;
}

std::vector<std::size_t> pareto_target_counts(std::size_t num_ranks, const ParetoTailSpec& spec,
                                              std::size_t anchor) {
  if (!(spec.scale >= -1.0) || !std::isfinite(spec.scale)) {
    throw InvalidParameter("pareto scale must be >= -1 (flat curve)");
  }
  if (!(spec.base_shape > 0.0)) throw InvalidParameter("pareto base shape must be positive");
  const double shape = spec.base_shape * (1.0 + spec.scale);
  std::vector<std::size_t> targets(num_ranks);
  for (std::size_t rank = 0; rank < num_ranks; ++rank) {
    const double survival = std::pow(1.0 + static_cast<double>(rank), -shape);
    const auto count = static_cast<std::size_t>(std::llround(static_cast<double>(anchor) * survival));
    targets[rank] = std::max<std::size_t>(1, count);
  }
  return targets;
}

Dataset pareto_resample(const Dataset& dataset, const ParetoTailSpec& spec) {
  if (dataset.size() == 0) throw EmptyInput("pareto_resample of an empty dataset");
  if (dataset.num_classes <= 1) return dataset;

  std::vector<std::size_t> order(dataset.num_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.class_counts[a] > dataset.class_counts[b];
  });
  const std::size_t anchor = spec.anchor.value_or(dataset.class_counts[order.front()]);
  const auto targets = pareto_target_counts(order.size(), spec, anchor);

  Rng rng(spec.rng_seed);
  std::vector<std::vector<std::size_t>> chosen(dataset.num_classes);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t cls = order[rank];
    std::vector<std::size_t> rows = dataset.rows_of_class(static_cast<int>(cls));
    const std::size_t target = targets[rank];
    auto& pick = chosen[cls];
    if (rows.empty()) continue;
    if (rows.size() >= target) {
      // Partial Fisher-Yates, then restore ascending order.
      for (std::size_t i = 0; i < target; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(rows.size() - i));
        std::swap(rows[i], rows[j]);
      }
      rows.resize(target);
      std::sort(rows.begin(), rows.end());
      pick = std::move(rows);
    } else {
      pick = rows;
      while (pick.size() < target) pick.push_back(rows[rng.below(rows.size())]);
    }
  }

  Dataset out;
  out.num_classes = dataset.num_classes;
  out.split = dataset.split;
  out.class_names = dataset.class_names;
  std::size_t total = 0;
  for (const auto& p : chosen) total += p.size();
  out.features = Matrix(total, dataset.dims());
  std::size_t row = 0;
  for (std::size_t cls = 0; cls < chosen.size(); ++cls) {
    for (std::size_t src : chosen[cls]) {
      std::copy(dataset.features.row(src).begin(), dataset.features.row(src).end(),
                out.features.row(row).begin());
      out.labels.push_back(static_cast<int>(cls));
      ++row;
    }
  }
  finalize(out);
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");

  std::string line;
  std::size_t row_number = 1;
  if (!std::getline(in, line)) throw ParseError("empty CSV file '" + path.string() + "'", 1);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw ParseError("label column '" + label_column + "' not found in header", 1);
  }
  const auto label_index = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dims = header.size() - 1;
  if (dims == 0) throw ParseError("CSV has no feature columns", 1);

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       row_number);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i == label_index) {
        raw_labels.emplace_back(fields[i]);
        continue;
      }
      double v = 0.0;
      const auto* first = fields[i].data();
      const auto* last = first + fields[i].size();
      if (!fields[i].empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || fields[i].empty() || !std::isfinite(v)) {
        throw ParseError("non-numeric feature '" + std::string(fields[i]) + "' in column '" +
                             std::string(header[i]) + "'",
                         row_number);
      }
      values.push_back(v);
    }
  }
  if (raw_labels.empty()) throw ParseError("CSV contains no data rows", row_number);

  std::map<std::string, int> index;
  for (const auto& l : raw_labels) index.emplace(l, 0);
  Dataset out;
  int next = 0;
  for (auto& [name, idx] : index) {
    idx = next++;
    out.class_names.push_back(name);
  }
  out.num_classes = index.size();
  out.features = Matrix(raw_labels.size(), dims);
  out.features.data = std::move(values);
  for (const auto& l : raw_labels) out.labels.push_back(index.at(l));
  finalize(out);
  return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  for (std::size_t f = 0; f < dataset.dims(); ++f) out << 'x' << f << ',';
  out << label_column << '\n';
  char buf[64];
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (std::size_t f = 0; f < dataset.dims(); ++f) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), dataset.features(r, f));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    const auto y = static_cast<std::size_t>(dataset.labels[r]);
    out << (y < dataset.class_names.size() ? dataset.class_names[y] : std::to_string(y)) << '\n';
  }
  if (!out) throw IoError("failed writing dataset '" + path.string() + "'");
}

}  // namespace biaslab
