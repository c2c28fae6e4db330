#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace vsdl::evalkit {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fn + fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
};

/// Prediction is positive iff score >= threshold.
ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

/// Ratios with a zero denominator are reported as 0 (F1 is 0 when tp = 0).
/// Throws InputError for an all-zero matrix.
Metrics metrics(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold = std::numeric_limits<double>::infinity();
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Points from (0,0) at threshold +inf, then one point per distinct score in
/// descending order; tied scores move together, so the last point is (1,1).
struct RocCurve {
  std::vector<RocPoint> points;
};

/// Throws InputError unless both classes are present.
RocCurve roc(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

/// Youden-optimal threshold among the distinct-score points (the +inf start
/// point is excluded). Ties go to the lower fpr, then the lower threshold.
double optimal_threshold(const RocCurve& curve);

}  // namespace vsdl::evalkit
