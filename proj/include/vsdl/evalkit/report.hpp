#pragma once

#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsdl/evalkit/metrics.hpp"

namespace vsdl::evalkit {

struct CaseResult {
  std::string id;
  double score = 0.0;
  int label = 0;
  int prediction = 0;
};

struct EvalReport {
  std::string model;
  std::string split;
  ConfusionMatrix confusion;
  Metrics metrics;
  double auc = 0.0;
  double threshold = 0.5;
  std::string threshold_source = "optimal";  // or "override"
  std::vector<CaseResult> cases;
  RocCurve curve;
};

/// Scores every case, picks the Youden-optimal threshold unless
/// `threshold_override` is set, and derives all metrics from it.
EvalReport make_report(std::string model, std::string split, std::span<const std::string> ids,
                       std::span<const double> scores, std::span<const int> labels,
                       std::optional<double> threshold_override = std::nullopt);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// "threshold,fpr,tpr" rows; the start point's threshold is written as inf.
std::string roc_csv(const RocCurve& curve);
RocCurve roc_from_csv(const std::string& text);

struct RocTrace {
  std::string label;
  RocCurve curve;
  double auc = 0.0;
};

/// Standalone SVG line plot with a chance diagonal and an AUC legend.
std::string roc_svg(std::span<const RocTrace> traces, const std::string& title = "ROC");

/// Human-readable confusion matrix and metrics block.
std::string format_table(const EvalReport& report);

}  // namespace vsdl::evalkit
