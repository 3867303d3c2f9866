#include "cxrnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cxrnet {
namespace {

void validate_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InputError("scores and labels differ in length (" +
                     std::to_string(scores.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw InputError("no scores to evaluate");
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("scores must be finite");
  }
}

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

// Cumulative (fp, tp) after each group of tied scores, highest score first.
struct SweepStep {
  double threshold;
  std::size_t fp;
  std::size_t tp;
};

std::vector<SweepStep> sweep(std::span<const double> scores,
                             std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<SweepStep> steps;
  std::size_t fp = 0, tp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
    }
    steps.push_back({threshold, fp, tp});
  }
  return steps;
}

double trapezoid(const std::vector<CurvePoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) / 2.0;
  }
  return area;
}

}  // namespace

double ConfusionMatrix::accuracy() const {
  if (total() == 0) throw InputError("accuracy of an empty confusion matrix");
  return static_cast<double>(tn + tp) / static_cast<double>(total());
}

ConfusionMatrix confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold) {
  validate_inputs(scores, labels);
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn) += 1;
    } else {
      (predicted ? cm.fp : cm.tn) += 1;
    }
  }
  return cm;
}

ClassMetrics precision_recall_f1(const ConfusionMatrix& cm, Label label) {
  // For the normal class the roles of positives and negatives swap.
  const bool positive = label == Label::pneumonia;
  const std::size_t hit = positive ? cm.tp : cm.tn;
  const std::size_t false_alarm = positive ? cm.fp : cm.fn;
  const std::size_t miss = positive ? cm.fn : cm.fp;

  ClassMetrics m;
  m.precision = ratio(hit, hit + false_alarm, m.degenerate);
  m.recall = ratio(hit, hit + miss, m.degenerate);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1 = 0.0;
    m.degenerate = true;
  }
  return m;
}

Curve roc_curve_auc(std::span<const double> scores, std::span<const int> labels) {
  validate_inputs(scores, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw InputError("ROC needs at least one positive and one negative label");
  }
  Curve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (const SweepStep& s : sweep(scores, labels)) {
    curve.points.push_back({s.threshold,
                            static_cast<double>(s.fp) / static_cast<double>(negatives),
                            static_cast<double>(s.tp) / static_cast<double>(positives)});
  }
  curve.auc = trapezoid(curve.points);
  return curve;
}

Curve pr_curve_auc(std::span<const double> scores, std::span<const int> labels) {
  validate_inputs(scores, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) throw InputError("PR curve needs at least one positive label");
  Curve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  for (const SweepStep& s : sweep(scores, labels)) {
    curve.points.push_back(
        {s.threshold, static_cast<double>(s.tp) / static_cast<double>(positives),
         static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp)});
  }
  curve.auc = trapezoid(curve.points);
  return curve;
}

double average_precision(std::span<const double> scores,
                         std::span<const int> labels) {
  const Curve pr = pr_curve_auc(scores, labels);
  double ap = 0.0;
  for (std::size_t i = 1; i < pr.points.size(); ++i) {
    ap += (pr.points[i].x - pr.points[i - 1].x) * pr.points[i].y;
  }
  return ap;
}

}  // namespace cxrnet
