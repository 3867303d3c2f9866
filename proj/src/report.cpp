#include "cxrnet/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace cxrnet {
namespace {

// 17 significant digits round-trip doubles exactly.
std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

nlohmann::json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"degenerate", m.degenerate}};
}

}  // namespace

EvaluationReport make_report(std::span<const double> scores,
                             std::span<const int> labels, double threshold) {
  EvaluationReport r;
  r.threshold = threshold;
  r.confusion = confusion_at_threshold(scores, labels, threshold);
  r.accuracy = r.confusion.accuracy();
  r.normal = precision_recall_f1(r.confusion, Label::normal);
  r.pneumonia = precision_recall_f1(r.confusion, Label::pneumonia);
  r.roc = roc_curve_auc(scores, labels);
  r.pr = pr_curve_auc(scores, labels);
  r.average_precision = average_precision(scores, labels);
  return r;
}

std::string report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["total"] = r.confusion.total();
  j["threshold"] = r.threshold;
  j["confusion"] = {{"tn", r.confusion.tn},
                    {"fp", r.confusion.fp},
                    {"fn", r.confusion.fn},
                    {"tp", r.confusion.tp}};
  j["accuracy"] = r.accuracy;
  j["classes"] = {{"NORMAL", class_json(r.normal)},
                  {"PNEUMONIA", class_json(r.pneumonia)}};
  j["roc_auc"] = r.roc.auc;
  j["pr_auc"] = r.pr.auc;
  j["average_precision"] = r.average_precision;
  return j.dump(2) + "\n";
}

std::string roc_csv(const Curve& roc) {
  std::string out = "threshold,fpr,tpr\n";
  for (const CurvePoint& p : roc.points) {
    out += number(p.threshold) + "," + number(p.x) + "," + number(p.y) + "\n";
  }
  return out;
}

std::string pr_csv(const Curve& pr) {
  std::string out = "threshold,recall,precision\n";
  for (const CurvePoint& p : pr.points) {
    out += number(p.threshold) + "," + number(p.x) + "," + number(p.y) + "\n";
  }
  return out;
}

std::string scores_csv(const Scores& scores) {
  std::string out = "index,label,score\n";
  for (std::size_t i = 0; i < scores.probabilities.size(); ++i) {
    out += fmt::format("{},{},{}\n", i, scores.labels[i], number(scores.probabilities[i]));
  }
  return out;
}

Scores parse_scores_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "index,label,score") {
    throw FormatError("scores file must start with 'index,label,score'");
  }
  Scores scores;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string index, label, score;
    if (!std::getline(fields, index, ',') || !std::getline(fields, label, ',') ||
        !std::getline(fields, score)) {
      throw FormatError("malformed scores row " + std::to_string(row + 1));
    }
    try {
      std::size_t used = 0;
      const int y = std::stoi(label, &used);
      if (used != label.size()) throw std::invalid_argument(label);
      const double s = std::stod(score, &used);
      if (used != score.size()) throw std::invalid_argument(score);
      scores.labels.push_back(y);
      scores.probabilities.push_back(s);
    } catch (const std::logic_error&) {
      throw FormatError("malformed scores row " + std::to_string(row + 1));
    }
    ++row;
  }
  if (scores.labels.empty()) throw FormatError("scores file has no rows");
  return scores;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw FormatError("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_report_files(const std::filesystem::path& directory,
                        const EvaluationReport& report) {
  write_text_file(directory / "report.json", report_json(report));
  write_text_file(directory / "roc.csv", roc_csv(report.roc));
  write_text_file(directory / "pr.csv", pr_csv(report.pr));
}

}  // namespace cxrnet
