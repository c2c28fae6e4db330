#include "vsdl/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vsdl/error.hpp"

namespace vsdl::evalkit {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InputError("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
  if (scores.empty()) throw InputError("no scores given");
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("label " + std::to_string(y) + " outside {0,1}");
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
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

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw InputError("metrics of an empty confusion matrix");
  return {ratio(cm.tp, cm.tp + cm.fn), ratio(cm.tn, cm.tn + cm.fp), ratio(cm.tp + cm.tn, cm.total()),
          ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn)};
}

RocCurve roc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw InputError("ROC curve undefined: only one class present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({s, ratio(fp, negatives), ratio(tp, positives)});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double optimal_threshold(const RocCurve& curve) {
  if (curve.points.size() < 2) throw InputError("ROC curve has no score thresholds");
  // J values are differences of small rationals; compare with a tolerance so
  // equal J reached through different fractions counts as a tie.
  constexpr double kTie = 1e-12;
  const RocPoint* best = nullptr;
  double best_j = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    const double j = p.tpr - p.fpr;
    const bool tie = best != nullptr && std::abs(j - best_j) <= kTie;
    const bool better = best == nullptr || (!tie && j > best_j) ||
                        (tie && (p.fpr < best->fpr || (p.fpr == best->fpr && p.threshold < best->threshold)));
    if (better) {
      best = &p;
      best_j = j;
    }
  }
  return best->threshold;
}

}  // namespace vsdl::evalkit
