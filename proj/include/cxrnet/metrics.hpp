#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cxrnet/datapipe.hpp"

namespace cxrnet {

/// 2x2 counts with pneumonia (label 1) as the positive class.
struct ConfusionMatrix {
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;

  std::size_t total() const noexcept { return tn + fp + fn + tp; }
  /// (tn + tp) / total, from integer counts.
  double accuracy() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predicts positive iff score >= threshold. Labels must be 0 or 1.
ConfusionMatrix confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold = 0.5);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when a ratio had a zero denominator and was defined as 0.
  bool degenerate = false;
};

/// Metrics for `label` treated as the class of interest.
ClassMetrics precision_recall_f1(const ConfusionMatrix& cm, Label label);

struct CurvePoint {
  double threshold;  // +inf for the (0,0) ROC sentinel
  double x;          // FPR (ROC) or recall (PR)
  double y;          // TPR (ROC) or precision (PR)
};

struct Curve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

/// ROC from a sweep over every distinct score, highest first. Tied scores
/// form one threshold step. Starts at the (0,0) sentinel, ends at (1,1).
/// AUC by the trapezoidal rule. Needs both classes present.
Curve roc_curve_auc(std::span<const double> scores, std::span<const int> labels);

/// Precision-recall points at every distinct threshold, highest first
/// (so recall is non-decreasing), preceded by the (recall 0, precision 1)
/// anchor. AUC by the trapezoidal rule over recall. Needs a positive label.
Curve pr_curve_auc(std::span<const double> scores, std::span<const int> labels);

/// Step-wise average precision: sum over thresholds of
/// (recall_k - recall_{k-1}) * precision_k.
double average_precision(std::span<const double> scores,
                         std::span<const int> labels);

}  // namespace cxrnet
