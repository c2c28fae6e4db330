#include <doctest.h>

#include <cmath>

#include "vsdl/error.hpp"
#include "vsdl/evalkit/report.hpp"

using namespace vsdl;
using namespace vsdl::evalkit;

namespace {

const std::vector<std::string> kIds{"a", "b", "c", "d", "e", "f"};
const std::vector<double> kScores{0.91, 0.15, 0.62, 0.40, 0.77, 0.05};
const std::vector<int> kLabels{1, 0, 1, 0, 0, 1};

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("report metrics agree with its confusion matrix") {
  auto r = make_report("dcnn-lstm", "test", kIds, kScores, kLabels);
  CHECK(r.threshold_source == "optimal");
  CHECK(r.threshold == optimal_threshold(r.curve));
  CHECK(r.confusion == confusion_at(kScores, kLabels, r.threshold));
  const auto m = metrics(r.confusion);
  CHECK(std::abs(r.metrics.sensitivity - m.sensitivity) <= 1e-12);
  CHECK(std::abs(r.metrics.f1 - m.f1) <= 1e-12);
  CHECK(r.auc == auc(roc(kScores, kLabels)));
  REQUIRE(r.cases.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(r.cases[i].id == kIds[i]);
    CHECK(r.cases[i].prediction == (kScores[i] >= r.threshold ? 1 : 0));
  }
}

TEST_CASE("threshold override is honoured") {
  auto r = make_report("cnn3d", "val", kIds, kScores, kLabels, 0.5);
  CHECK(r.threshold == 0.5);
  CHECK(r.threshold_source == "override");
  CHECK(r.confusion == ConfusionMatrix{2, 1, 1, 2});
  std::vector<std::string> short_ids{"a"};
  CHECK_THROWS_AS(make_report("x", "test", short_ids, kScores, kLabels), InputError);
}

TEST_CASE("report JSON round trip") {
  auto r = make_report("cnn-lstm", "test", kIds, kScores, kLabels);
  auto back = report_from_json(to_json(r));
  CHECK(back.model == r.model);
  CHECK(back.confusion == r.confusion);
  CHECK(back.auc == r.auc);
  CHECK(back.threshold == r.threshold);
  CHECK(back.metrics.accuracy == r.metrics.accuracy);
  REQUIRE(back.cases.size() == r.cases.size());
  CHECK(back.cases[4].score == 0.77);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"model", "x"}}), InputError);
}

TEST_CASE("ROC CSV round trip is exact") {
  auto curve = roc(kScores, kLabels);
  const auto text = roc_csv(curve);
  CHECK(text.rfind("threshold,fpr,tpr\ninf,0,0\n", 0) == 0);
  auto back = roc_from_csv(text);
  REQUIRE(back.points.size() == curve.points.size());
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    CHECK(back.points[i].threshold == curve.points[i].threshold);
    CHECK(back.points[i].fpr == curve.points[i].fpr);
    CHECK(back.points[i].tpr == curve.points[i].tpr);
  }
  CHECK_THROWS_AS(roc_from_csv("fpr,tpr\n"), InputError);
  CHECK_THROWS_AS(roc_from_csv("threshold,fpr,tpr\n0.5,zero,1\n"), InputError);
}

TEST_CASE("ROC SVG has one trace and legend per model plus the diagonal") {
  std::vector<RocTrace> traces{{"CNN3D", roc(kScores, kLabels), 0.44}, {"DCNN_LSTM", roc(kScores, kLabels), 0.89}};
  const auto svg = roc_svg(traces, "Test ROC");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(occurrences(svg, "class=\"roc-trace\"") == 2);
  CHECK(occurrences(svg, "class=\"auc-legend\"") == 2);
  CHECK(svg.find("DCNN_LSTM (AUC = 0.89)") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("Test ROC") != std::string::npos);
}

TEST_CASE("format_table lays out the confusion matrix") {
  ConfusionMatrix cm{5, 0, 1, 9};
  EvalReport r;
  r.model = "DCNN_LSTM";
  r.split = "test";
  r.confusion = cm;
  r.metrics = metrics(cm);
  r.auc = 0.96;
  const auto table = format_table(r);
  CHECK(table.find("Predicted Unstable             5             1") != std::string::npos);
  CHECK(table.find("Predicted Control              0             9") != std::string::npos);
  CHECK(table.find("Accuracy 0.93") != std::string::npos);
  CHECK(table.find("F1-score 0.91") != std::string::npos);
}
