#include "biaslab/report.h"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "biaslab/error.h"

namespace biaslab {

namespace {

using ojson = nlohmann::ordered_json;

constexpr double kPercent = 100.0;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string counts_to_string(const std::vector<std::size_t>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(counts[i]);
  }
  return out;
}

std::vector<std::size_t> counts_from_json(const nlohmann::json& v) {
  if (v.is_array()) return v.get<std::vector<std::size_t>>();
  std::vector<std::size_t> out;
  std::stringstream ss(v.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

std::string class_label(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : std::to_string(c);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::filesystem::path> write_run(const RunRecord& record,
                                             const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> paths{dir / kReportJson, dir / kMetricsCsv,
                                           dir / kHistoryCsv, dir / kEmbeddingsCsv};
  write_file(paths[0], run_to_json(record).dump(2) + "\n");
  write_file(paths[1], metrics_csv(record.metrics, record.class_names));
  write_file(paths[2], history_csv(record.sampler));
  write_file(paths[3], embeddings_csv(record));
  return paths;
}

}  // namespace

ojson config_to_json(const ExperimentConfig& config) {
  ojson j;
  const auto& ds = config.dataset;
  if (ds.kind == DatasetKind::kBlobs) {
    j["dataset"] = "blobs";
    j["counts"] = counts_to_string(ds.train_counts);
    j["test-counts"] = counts_to_string(ds.test_counts);
    j["dims"] = ds.dims;
    j["separation"] = ds.separation;
  } else {
    j["dataset"] = ds.csv_path;
    j["test-dataset"] = ds.test_csv_path;
    j["label-column"] = ds.label_column;
    j["holdout"] = ds.holdout_fraction;
  }
  j["pareto-scale"] = ds.pareto_scale ? ojson(*ds.pareto_scale) : ojson(nullptr);
  j["sampler"] = to_string(config.sampler.strategy);
  j["weight-class"] = to_string(config.sampler.weight_class);
  j["recency-penalty"] = config.sampler.recency_penalty;
  j["epsilon"] = config.epsilon;
  j["perturbation-sign"] =
      config.perturbation_sign == PerturbationSign::kAsWritten ? "as-written" : "odin-classic";
  j["temp-kind"] = to_string(config.schedule.kind);
  j["temp-start"] = config.schedule.start;
  j["temp-scale"] = config.schedule.scale;
  j["temp-interval"] = config.schedule.interval_epochs;
  j["temp-horizon"] = config.resolved_schedule().horizon_epochs;
  j["epochs"] = config.epochs;
  j["batch-size"] = config.batch_size;
  j["lr"] = config.learning_rate;
  j["hidden"] = config.hidden;
  j["seeds"] = config.seeds;
  j["eval-mode"] = to_string(config.resolved_eval_mode());
  j["out"] = config.out_dir;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    const std::string dataset = doc.value("dataset", std::string("blobs"));
    if (dataset == "blobs") {
      c.dataset.kind = DatasetKind::kBlobs;
      if (doc.contains("counts")) c.dataset.train_counts = counts_from_json(doc["counts"]);
      if (doc.contains("test-counts")) c.dataset.test_counts = counts_from_json(doc["test-counts"]);
      c.dataset.dims = doc.value("dims", c.dataset.dims);
      c.dataset.separation = doc.value("separation", c.dataset.separation);
    } else {
      c.dataset.kind = DatasetKind::kCsv;
      c.dataset.csv_path = dataset;
      c.dataset.test_csv_path = doc.value("test-dataset", std::string());
      c.dataset.label_column = doc.value("label-column", c.dataset.label_column);
      c.dataset.holdout_fraction = doc.value("holdout", c.dataset.holdout_fraction);
    }
    if (doc.contains("pareto-scale") && !doc["pareto-scale"].is_null()) {
      c.dataset.pareto_scale = doc["pareto-scale"].get<double>();
    }
    c.sampler.strategy = parse_strategy(doc.value("sampler", std::string("boost")));
    c.sampler.weight_class = parse_weight_class(doc.value("weight-class", std::string("true")));
    c.sampler.recency_penalty = doc.value("recency-penalty", c.sampler.recency_penalty);
    c.epsilon = doc.value("epsilon", c.epsilon);
    const std::string sign = doc.value("perturbation-sign", std::string("as-written"));
    if (sign == "as-written") {
      c.perturbation_sign = PerturbationSign::kAsWritten;
    } else if (sign == "odin-classic") {
      c.perturbation_sign = PerturbationSign::kOdinClassic;
    } else {
      throw ConfigError("unknown perturbation sign '" + sign + "'");
    }
    c.schedule.kind = parse_schedule_kind(doc.value("temp-kind", std::string("multiplicative")));
    c.schedule.start = doc.value("temp-start", c.schedule.start);
    c.schedule.scale = doc.value("temp-scale", c.schedule.scale);
    c.schedule.interval_epochs = doc.value("temp-interval", c.schedule.interval_epochs);
    if (doc.contains("temp-horizon")) c.temp_horizon = doc["temp-horizon"].get<std::size_t>();
    c.epochs = doc.value("epochs", c.epochs);
    c.batch_size = doc.value("batch-size", c.batch_size);
    c.learning_rate = doc.value("lr", c.learning_rate);
    c.hidden = doc.value("hidden", c.hidden);
    if (doc.contains("seeds")) c.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
    if (doc.contains("eval-mode")) c.eval_mode = parse_eval_mode(doc["eval-mode"].get<std::string>());
    c.out_dir = doc.value("out", c.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return c;
}

ojson metrics_to_json(const MetricsReport& report, const std::vector<std::string>& class_names) {
  ojson per_class = ojson::object();
  ojson sodc_per_class = ojson::array();
  ojson partition = ojson::object();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    const std::string name = class_label(class_names, c);
    per_class[name] = {{"accuracy", m.accuracy * kPercent},
                       {"f1", m.f1 * kPercent},
                       {"precision", m.precision * kPercent},
                       {"recall", m.recall * kPercent},
                       {"sodc", m.sodc * kPercent},
                       {"support", m.support},
                       {"predicted", m.predicted},
                       {"precision_undefined", m.precision_undefined}};
    sodc_per_class.push_back(m.sodc * kPercent);
    if (c < report.ood_partition.id_counts.size()) {
      partition[name] = {{"id", report.ood_partition.id_counts[c]},
                         {"ood", report.ood_partition.ood_counts[c]}};
    }
  }
  ojson bias = ojson::object();
  for (const char* metric : {"accuracy", "f1", "precision", "recall", "sodc"}) {
    const auto it = report.bias.find(metric);
    if (it == report.bias.end()) continue;
    bias[metric] = {{"mab", it->second.mab * kPercent}, {"sdb", it->second.sdb * kPercent}};
  }
  ojson j;
  j["per_class"] = per_class;
  j["aggregate"] = {{"accuracy", report.aggregate.accuracy * kPercent},
                    {"f1", report.aggregate.macro_f1 * kPercent},
                    {"precision", report.aggregate.macro_precision * kPercent},
                    {"recall", report.aggregate.macro_recall * kPercent},
                    {"sodc", report.aggregate.sodc_total * kPercent}};
  j["bias"] = bias;
  j["sodc"] = {{"per_class", sodc_per_class}, {"total", report.aggregate.sodc_total * kPercent}};
  j["ood_partition"] = partition;
  return j;
}

ojson run_to_json(const RunRecord& record) {
  ojson j;
  j["config"] = config_to_json(record.config);
  j["seed"] = record.seed;
  j["sampler"] = to_string(record.config.sampler.strategy);
  j["evaluation_mode"] = to_string(record.eval_mode);
  ojson epochs = ojson::array();
  for (const auto& e : record.per_epoch) {
    epochs.push_back({{"epoch", e.epoch},
                      {"loss", e.loss},
                      {"temperature", e.temperature},
                      {"sampling_entropy", e.sampling_entropy}});
  }
  j["per_epoch"] = epochs;
  j["degenerate_sampling_events"] = record.sampler.degenerate_events;
  j["metrics"] = metrics_to_json(record.metrics, record.class_names);
  return j;
}

ojson summarize(std::span<const RunRecord> records) {
  // Preserve first-seen strategy order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    const std::string key = to_string(r.config.sampler.strategy);
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  ojson out = ojson::object();
  for (const auto& key : order) {
    const auto& runs = groups[key];
    const auto n = static_cast<double>(runs.size());
    const std::size_t k = runs.front()->metrics.per_class.size();
    double acc = 0, f1 = 0, prec = 0, rec = 0, sodc = 0;
    std::map<std::string, BiasPair> bias;
    std::vector<double> recall(k, 0.0);
    std::vector<std::uint64_t> seeds;
    for (const RunRecord* r : runs) {
      const auto& a = r->metrics.aggregate;
      acc += a.accuracy / n;
      f1 += a.macro_f1 / n;
      prec += a.macro_precision / n;
      rec += a.macro_recall / n;
      sodc += a.sodc_total / n;
      for (const auto& [metric, pair] : r->metrics.bias) {
        bias[metric].mab += pair.mab / n;
        bias[metric].sdb += pair.sdb / n;
      }
      for (std::size_t c = 0; c < k && c < r->metrics.per_class.size(); ++c) {
        recall[c] += r->metrics.per_class[c].recall / n;
      }
      seeds.push_back(r->seed);
    }
    ojson bias_json = ojson::object();
    for (const auto& [metric, pair] : bias) {
      bias_json[metric] = {{"mab", pair.mab * kPercent}, {"sdb", pair.sdb * kPercent}};
    }
    ojson recall_json = ojson::array();
    for (double r : recall) recall_json.push_back(r * kPercent);
    out[key] = {{"seeds", seeds},
                {"aggregate",
                 {{"accuracy", acc * kPercent},
                  {"f1", f1 * kPercent},
                  {"precision", prec * kPercent},
                  {"recall", rec * kPercent},
                  {"sodc", sodc * kPercent}}},
                {"per_class_recall", recall_json},
                {"bias", bias_json}};
  }
  return out;
}

std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& class_names) {
  std::string out = "class,metric,value\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    const std::string name = class_label(class_names, c);
    const std::pair<const char*, double> rows[] = {{"accuracy", m.accuracy},
                                                   {"f1", m.f1},
                                                   {"precision", m.precision},
                                                   {"recall", m.recall},
                                                   {"sodc", m.sodc}};
    for (const auto& [metric, value] : rows) {
      out += name + "," + metric + "," + num(value * kPercent) + "\n";
    }
  }
  return out;
}

std::string history_csv(const SamplerState& sampler) {
  std::string out =
      "epoch,sample_id,true_class,predicted_class,calibrated_score,sampling_probability,"
      "times_drawn\n";
  for (const auto& epoch : sampler.history) {
    for (const auto& s : epoch.samples) {
      out += std::to_string(epoch.epoch) + "," + std::to_string(s.sample_id) + "," +
             std::to_string(s.true_class) + "," + std::to_string(s.predicted_class) + "," +
             num(s.calibrated_score) + "," + num(s.sampling_probability) + "," +
             std::to_string(s.times_drawn) + "\n";
    }
  }
  return out;
}

std::string embeddings_csv(const RunRecord& record) {
  std::string out = "sample_id,true_class,predicted_class";
  for (std::size_t h = 0; h < record.embeddings.cols; ++h) out += ",h" + std::to_string(h);
  out += "\n";
  for (std::size_t i = 0; i < record.embeddings.rows; ++i) {
    out += std::to_string(i) + "," +
           std::to_string(i < record.test_labels.size() ? record.test_labels[i] : -1) + "," +
           std::to_string(i < record.test_predictions.size() ? record.test_predictions[i] : -1);
    for (double v : record.embeddings.row(i)) out += "," + num(v);
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> export_reports(std::span<const RunRecord> records,
                                                  const std::filesystem::path& out_dir) {
  if (records.empty()) throw EmptyInput("no run records to export");
  if (records.size() == 1) return write_run(records.front(), out_dir);

  std::vector<std::filesystem::path> paths;
  for (const auto& r : records) {
    const auto dir =
        out_dir / to_string(r.config.sampler.strategy) / ("seed_" + std::to_string(r.seed));
    for (auto& p : write_run(r, dir)) paths.push_back(std::move(p));
  }
  const auto summary = out_dir / kSummaryJson;
  write_file(summary, summarize(records).dump(2) + "\n");
  paths.push_back(summary);
  return paths;
}

}  // namespace biaslab
