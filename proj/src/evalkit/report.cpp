#include "vsdl/evalkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "vsdl/error.hpp"

namespace vsdl::evalkit {

using nlohmann::json;

EvalReport make_report(std::string model, std::string split, std::span<const std::string> ids,
                       std::span<const double> scores, std::span<const int> labels,
                       std::optional<double> threshold_override) {
  if (ids.size() != scores.size()) throw InputError("case ids and scores differ in length");
  EvalReport r;
  r.model = std::move(model);
  r.split = std::move(split);
  r.curve = roc(scores, labels);
  r.auc = auc(r.curve);
  if (threshold_override) {
    r.threshold = *threshold_override;
    r.threshold_source = "override";
  } else {
    r.threshold = optimal_threshold(r.curve);
  }
  r.confusion = confusion_at(scores, labels, r.threshold);
  r.metrics = metrics(r.confusion);
  r.cases.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    r.cases.push_back({ids[i], scores[i], labels[i], scores[i] >= r.threshold ? 1 : 0});
  }
  return r;
}

json to_json(const EvalReport& r) {
  json cases = json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"id", c.id}, {"score", c.score}, {"label", c.label}, {"prediction", c.prediction}});
  }
  return {{"model", r.model},
          {"split", r.split},
          {"confusion", {{"tp", r.confusion.tp}, {"fn", r.confusion.fn}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}}},
          {"sensitivity", r.metrics.sensitivity},
          {"specificity", r.metrics.specificity},
          {"accuracy", r.metrics.accuracy},
          {"f1", r.metrics.f1},
          {"auc", r.auc},
          {"threshold", r.threshold},
          {"threshold_source", r.threshold_source},
          {"cases", cases}};
}

EvalReport report_from_json(const json& doc) {
  try {
    EvalReport r;
    r.model = doc.at("model").get<std::string>();
    r.split = doc.at("split").get<std::string>();
    const auto& cm = doc.at("confusion");
    r.confusion = {cm.at("tp").get<std::size_t>(), cm.at("fn").get<std::size_t>(), cm.at("fp").get<std::size_t>(),
                   cm.at("tn").get<std::size_t>()};
    r.metrics = {doc.at("sensitivity").get<double>(), doc.at("specificity").get<double>(),
                 doc.at("accuracy").get<double>(), doc.at("f1").get<double>()};
    r.auc = doc.at("auc").get<double>();
    r.threshold = doc.at("threshold").get<double>();
    r.threshold_source = doc.value("threshold_source", std::string("optimal"));
    for (const auto& c : doc.at("cases")) {
      r.cases.push_back({c.at("id").get<std::string>(), c.at("score").get<double>(), c.at("label").get<int>(),
                         c.at("prediction").get<int>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string roc_csv(const RocCurve& curve) {
  std::ostringstream out;
  out << "threshold,fpr,tpr\n";
  char buf[128];
  for (const auto& p : curve.points) {
    if (std::isinf(p.threshold)) {
      std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.fpr, p.tpr);
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
    }
    out << buf;
  }
  return out.str();
}

RocCurve roc_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "threshold,fpr,tpr") throw InputError("ROC CSV: missing header");
  RocCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, f, p;
    if (!std::getline(row, t, ',') || !std::getline(row, f, ',') || !std::getline(row, p)) {
      throw InputError("ROC CSV: malformed row '" + line + "'");
    }
    try {
      const double threshold = t == "inf" ? std::numeric_limits<double>::infinity() : std::stod(t);
      curve.points.push_back({threshold, std::stod(f), std::stod(p)});
    } catch (const std::exception&) {
      throw InputError("ROC CSV: malformed row '" + line + "'");
    }
  }
  return curve;
}

std::string roc_svg(std::span<const RocTrace> traces, const std::string& title) {
  constexpr double kSize = 480, kMargin = 60, kPlot = kSize - 2 * kMargin;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  auto px = [&](double fpr) { return kMargin + fpr * kPlot; };
  auto py = [&](double tpr) { return kSize - kMargin - tpr * kPlot; };

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  svg << "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  svg << "<text x=\"240\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", kMargin,
                kMargin, kPlot, kPlot);
  svg << buf;
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                  "font-size=\"11\">%.1f</text>\n",
                  px(v), kSize - kMargin + 16, v);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-family=\"sans-serif\" "
                  "font-size=\"11\">%.1f</text>\n",
                  kMargin - 6, py(v) + 4, v);
    svg << buf;
  }
  svg << "<text x=\"240\" y=\"465\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
         "False positive rate</text>\n";
  svg << "<text x=\"18\" y=\"240\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 240)\">True positive rate</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
                px(0), py(0), px(1), py(1));
  svg << buf;

  for (std::size_t t = 0; t < traces.size(); ++t) {
    const char* color = kColors[t % std::size(kColors)];
    svg << "<polyline class=\"roc-trace\" fill=\"none\" stroke-width=\"2\" stroke=\"" << color << "\" points=\"";
    for (const auto& p : traces[t].curve.points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.fpr), py(p.tpr));
      svg << buf;
    }
    svg << "\"/>\n";
    const double ly = kSize - kMargin - 12 - 18.0 * static_cast<double>(traces.size() - 1 - t);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                  px(0.45), ly - 4, px(0.52), ly - 4, color);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text class=\"auc-legend\" x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\">",
                  px(0.54), ly);
    svg << buf << traces[t].label;
    std::snprintf(buf, sizeof buf, " (AUC = %.2f)</text>\n", traces[t].auc);
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string format_table(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Model %s (%s split, threshold %.4f, %s)\n"
                "                     True Unstable  True Control\n"
                "  Predicted Unstable %13zu %13zu\n"
                "  Predicted Control  %13zu %13zu\n"
                "  Sensitivity %.2f  Specificity %.2f  Accuracy %.2f  F1-score %.2f  AUC %.2f\n",
                r.model.c_str(), r.split.c_str(), r.threshold, r.threshold_source.c_str(), r.confusion.tp,
                r.confusion.fp, r.confusion.fn, r.confusion.tn, r.metrics.sensitivity, r.metrics.specificity,
                r.metrics.accuracy, r.metrics.f1, r.auc);
  return buf;
}

}  // namespace vsdl::evalkit
