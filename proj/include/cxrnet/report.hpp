#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "cxrnet/metrics.hpp"
#include "cxrnet/trainer.hpp"

namespace cxrnet {

struct EvaluationReport {
  double threshold = 0.5;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  ClassMetrics normal;
  ClassMetrics pneumonia;
  Curve roc;
  Curve pr;
  double average_precision = 0.0;
};

EvaluationReport make_report(std::span<const double> scores,
                             std::span<const int> labels, double threshold = 0.5);

/// Scalars only (curve points go to the CSV files).
std::string report_json(const EvaluationReport& report);

/// `threshold,fpr,tpr`, one row per ROC point.
std::string roc_csv(const Curve& roc);

/// `threshold,recall,precision`, one row per PR point.
std::string pr_csv(const Curve& pr);

/// `index,label,score` rows, the input of the `report` command.
std::string scores_csv(const Scores& scores);
Scores parse_scores_csv(const std::string& text);

/// Writes report.json, roc.csv and pr.csv into `directory`.
void write_report_files(const std::filesystem::path& directory,
                        const EvaluationReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cxrnet
