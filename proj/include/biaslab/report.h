#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "biaslab/harness.h"
#include "json.hpp"

namespace biaslab {

/// File names written by export_reports for each run.
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kMetricsCsv = "metrics.csv";
inline constexpr const char* kHistoryCsv = "sampler_history.csv";
inline constexpr const char* kEmbeddingsCsv = "embeddings.csv";
inline constexpr const char* kSummaryJson = "summary.json";

/// Keys mirror the CLI flag names.
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Rates are exported as percentages.
nlohmann::ordered_json metrics_to_json(const MetricsReport& report,
                                       const std::vector<std::string>& class_names);

/// {config, seed, sampler, evaluation_mode, per_epoch, metrics}
nlohmann::ordered_json run_to_json(const RunRecord& record);

/// Mean aggregate and per-class metrics for each strategy in `records`.
nlohmann::ordered_json summarize(std::span<const RunRecord> records);

std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& class_names);
std::string history_csv(const SamplerState& sampler);
std::string embeddings_csv(const RunRecord& record);

/// One record: the four run files directly in out_dir. Several records:
/// a <sampler>/seed_<seed>/ directory per record plus summary.json.
/// Returns every path written. Throws IoError when out_dir is unwritable.
std::vector<std::filesystem::path> export_reports(std::span<const RunRecord> records,
                                                  const std::filesystem::path& out_dir);

}  // namespace biaslab
