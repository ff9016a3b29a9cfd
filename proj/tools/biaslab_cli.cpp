// biaslab command-line driver: train, evaluate and compare sampler strategies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biaslab/error.h"
#include "biaslab/harness.h"
#include "biaslab/report.h"

namespace {

using namespace biaslab;

struct Flags {
  std::string dataset = "blobs";
  std::string test_dataset;
  std::string label_column = "label";
  std::vector<std::size_t> counts{900, 100};
  std::vector<std::size_t> test_counts;
  std::size_t dims = 2;
  double separation = 2.0;
  double holdout = 0.3;
  std::string sampler = "boost";
  std::string weight_class = "true";
  double recency_penalty = 1.0;
  double epsilon = 0.05;
  std::string perturbation_sign = "as-written";
  std::string temp_kind = "multiplicative";
  double temp_start = 1.0;
  double temp_scale = 5.0;
  std::size_t temp_interval = 5;
  std::size_t temp_horizon = 0;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  double lr = 0.1;
  std::size_t hidden = 16;
  std::vector<std::uint64_t> seeds{1};
  double pareto_scale = 0.0;
  bool use_pareto = false;
  std::string eval_mode;
  std::string out = "out";
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--dataset", f.dataset, "'blobs' or a CSV path")->capture_default_str();
  app.add_option("--test-dataset", f.test_dataset, "CSV test split (default: holdout)");
  app.add_option("--label-column", f.label_column, "CSV label column")->capture_default_str();
  app.add_option("--counts", f.counts, "blob class counts")->delimiter(',')->capture_default_str();
  app.add_option("--test-counts", f.test_counts, "blob test class counts")->delimiter(',');
  app.add_option("--dims", f.dims, "blob dimensions")->capture_default_str();
  app.add_option("--separation", f.separation, "blob center distance")->capture_default_str();
  app.add_option("--holdout", f.holdout, "CSV holdout fraction")->capture_default_str();
  app.add_option("--sampler", f.sampler, "boost|random|dynamic-random|stratified|dynamic-stratified")
      ->check(CLI::IsMember({"boost", "random", "dynamic-random", "stratified", "dynamic-stratified"}))
      ->capture_default_str();
  app.add_option("--weight-class", f.weight_class, "class indexing BOOST weights: predicted|true")
      ->check(CLI::IsMember({"predicted", "true"}))
      ->capture_default_str();
  app.add_option("--recency-penalty", f.recency_penalty, "weight multiplier for recently drawn samples")
      ->capture_default_str();
  app.add_option("--epsilon", f.epsilon, "perturbation magnitude")->capture_default_str();
  app.add_option("--perturbation-sign", f.perturbation_sign, "as-written|odin-classic")
      ->check(CLI::IsMember({"as-written", "odin-classic"}))
      ->capture_default_str();
  app.add_option("--temp-kind", f.temp_kind, "multiplicative|inverse-linear")
      ->check(CLI::IsMember({"multiplicative", "inverse-linear"}))
      ->capture_default_str();
  app.add_option("--temp-start", f.temp_start, "initial temperature")->capture_default_str();
  app.add_option("--temp-scale", f.temp_scale, "temperature multiplier")->capture_default_str();
  app.add_option("--temp-interval", f.temp_interval, "epochs per temperature step")->capture_default_str();
  app.add_option("--temp-horizon", f.temp_horizon, "inverse-linear horizon (default: epochs)");
  app.add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  app.add_option("--batch-size", f.batch_size, "batch size")->capture_default_str();
  app.add_option("--lr", f.lr, "learning rate")->capture_default_str();
  app.add_option("--hidden", f.hidden, "hidden width")->capture_default_str();
  app.add_option("--seeds", f.seeds, "comma-separated seeds")->delimiter(',')->capture_default_str();
  app.add_option("--pareto-scale", f.pareto_scale, "long-tail resample the train split")
      ->each([&f](const std::string&) { f.use_pareto = true; });
  app.add_option("--eval-mode", f.eval_mode, "boost|control (default by sampler)")
      ->check(CLI::IsMember({"boost", "control"}));
  app.add_option("--out", f.out, "output directory")->capture_default_str();
}

ExperimentConfig to_config(const Flags& f) {
  ExperimentConfig c;
  if (f.dataset == "blobs") {
    c.dataset.kind = DatasetKind::kBlobs;
    c.dataset.train_counts = f.counts;
    c.dataset.test_counts = f.test_counts;
    c.dataset.dims = f.dims;
    c.dataset.separation = f.separation;
  } else {
    c.dataset.kind = DatasetKind::kCsv;
    c.dataset.csv_path = f.dataset;
    c.dataset.test_csv_path = f.test_dataset;
    c.dataset.label_column = f.label_column;
    c.dataset.holdout_fraction = f.holdout;
  }
  if (f.use_pareto) c.dataset.pareto_scale = f.pareto_scale;
  c.sampler.strategy = parse_strategy(f.sampler);
  c.sampler.weight_class = parse_weight_class(f.weight_class);
  c.sampler.recency_penalty = f.recency_penalty;
  c.epsilon = f.epsilon;
  c.perturbation_sign = f.perturbation_sign == "as-written" ? PerturbationSign::kAsWritten
                                                            : PerturbationSign::kOdinClassic;
  c.schedule.kind = parse_schedule_kind(f.temp_kind);
  c.schedule.start = f.temp_start;
  c.schedule.scale = f.temp_scale;
  c.schedule.interval_epochs = f.temp_interval;
  if (f.temp_horizon > 0) c.temp_horizon = f.temp_horizon;
  c.epochs = f.epochs;
  c.batch_size = f.batch_size;
  c.learning_rate = f.lr;
  c.hidden = f.hidden;
  c.seeds = f.seeds;
  if (!f.eval_mode.empty()) c.eval_mode = parse_eval_mode(f.eval_mode);
  c.out_dir = f.out;
  c.validate();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
}

void print_summary(std::span<const RunRecord> records) {
  const auto summary = summarize(records);
  std::printf("%-20s %9s %9s %9s %9s %9s %9s\n", "sampler", "accuracy", "f1", "recall",
              "precision", "MAB(acc)", "SDB(acc)");
  for (const auto& [name, s] : summary.items()) {
    const auto& a = s["aggregate"];
    const auto& b = s["bias"]["accuracy"];
    std::printf("%-20s %9.2f %9.2f %9.2f %9.2f %9.2f %9.2f\n", name.c_str(),
                a["accuracy"].get<double>(), a["f1"].get<double>(), a["recall"].get<double>(),
                a["precision"].get<double>(), b["mab"].get<double>(), b["sdb"].get<double>());
  }
}

int cmd_train(const Flags& f) {
  const ExperimentConfig config = to_config(f);
  const auto records = run_all_seeds(config);
  const auto written = export_reports(records, config.out_dir);
  for (const auto& r : records) {
    const std::filesystem::path dir =
        records.size() == 1 ? std::filesystem::path(config.out_dir)
                            : std::filesystem::path(config.out_dir) /
                                  to_string(r.config.sampler.strategy) /
                                  ("seed_" + std::to_string(r.seed));
    write_text(dir / "model.json", model_to_json(r.model) + "\n");
  }
  print_summary(records);
  std::printf("wrote %zu report files under %s\n", written.size(), config.out_dir.c_str());
  return 0;
}

int cmd_evaluate(const Flags& f, const std::string& model_path, double temperature) {
  const ExperimentConfig config = to_config(f);
  const ClassifierModel model = model_from_json(read_file(model_path));
  const std::uint64_t seed = config.seeds.front();
  const ExperimentData data = build_datasets(config.dataset, seed);
  EvaluationOptions options = evaluation_options(config, seed);
  if (temperature > 0.0) options.temperature = temperature;
  const EvalMode mode = config.resolved_eval_mode();
  const MetricsReport report = run_evaluation(model, data.train, data.test, mode, options);

  nlohmann::ordered_json doc;
  doc["config"] = config_to_json(config);
  doc["model"] = model_path;
  doc["evaluation_mode"] = to_string(mode);
  doc["temperature"] = options.temperature;
  doc["metrics"] = metrics_to_json(report, data.test.class_names);
  const std::filesystem::path out(config.out_dir);
  write_text(out / kReportJson, doc.dump(2) + "\n");
  write_text(out / kMetricsCsv, metrics_csv(report, data.test.class_names));

  const auto& a = doc["metrics"]["aggregate"];
  std::printf("accuracy %.2f  f1 %.2f  recall %.2f  precision %.2f  sodc %.4g\n",
              a["accuracy"].get<double>(), a["f1"].get<double>(), a["recall"].get<double>(),
              a["precision"].get<double>(), a["sodc"].get<double>());
  return 0;
}

int cmd_compare(const Flags& f, const std::vector<std::string>& strategy_names) {
  const ExperimentConfig config = to_config(f);
  std::vector<Strategy> strategies;
  for (const auto& s : strategy_names) strategies.push_back(parse_strategy(s));
  const auto records = run_comparison(config, strategies);
  const auto written = export_reports(records, config.out_dir);
  print_summary(records);
  std::printf("wrote %zu report files under %s\n", written.size(), config.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias-aware adaptive sampling laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML config file with the same keys as the flags");

  Flags flags;
  add_common(app, flags);

  auto* train = app.add_subcommand("train", "train one sampler over every seed and export reports");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved model checkpoint");
  std::string model_path;
  double temperature = 0.0;
  evaluate->add_option("--model", model_path, "model checkpoint JSON")->required();
  evaluate->add_option("--temperature", temperature, "evaluation temperature (default: final scheduled)");
  auto* compare = app.add_subcommand("compare", "run several samplers over the same seeds");
  std::vector<std::string> strategies{"boost", "random", "dynamic-random", "stratified",
                                      "dynamic-stratified"};
  compare->add_option("--strategies", strategies, "samplers to compare")
      ->delimiter(',')
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(flags);
    if (*evaluate) return cmd_evaluate(flags, model_path, temperature);
    if (*compare) return cmd_compare(flags, strategies);
  } catch (const biaslab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
