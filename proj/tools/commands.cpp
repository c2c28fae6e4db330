#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "vsdl/datapipe/preprocess.hpp"
#include "vsdl/datapipe/stack_io.hpp"
#include "vsdl/error.hpp"
#include "vsdl/evalkit/metrics.hpp"
#include "vsdl/netblocks/weights_io.hpp"

namespace vsdl::cli {

namespace fs = std::filesystem;
using datapipe::Split;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_split_summary(const datapipe::DatasetManifest& m) {
  std::cout << "split   unstable  control\n";
  for (auto split : {Split::train, Split::val, Split::test}) {
    std::printf("%-7s %8zu %8zu\n", datapipe::to_string(split).c_str(), m.count(1, split), m.count(0, split));
  }
  std::cout.flush();
}

struct LoadedRun {
  RunInfo info;
  netblocks::Network net;
};

LoadedRun load_run(const fs::path& run_dir) {
  auto info = read_run_info(run_dir);
  auto net = netblocks::load_weights(info.spec, run_dir / kWeightsFile);
  return {std::move(info), std::move(net)};
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg) {
  const fs::path out = cfg.out.empty() ? fs::path("cohort") : cfg.out;
  const auto m = phantom::generate_cohort(cfg.n_unstable, cfg.n_control, cfg.phantom, cfg.seed, out);
  std::cout << "generated " << m.entries.size() << " scans (" << cfg.n_unstable << " unstable, " << cfg.n_control
            << " control) at " << cfg.phantom.side_px << "x" << cfg.phantom.side_px << " px in " << out.string()
            << "\n";
  print_split_summary(m);
  std::cout << "manifest: " << (out / "manifest.json").string() << "\n";
}

void cmd_preprocess(const PreprocessArgs& args, const fs::path& out) {
  if (out.empty()) throw ConfigError("preprocess needs --out");
  const auto volume = datapipe::read_volume(args.input);
  auto stack = datapipe::select_slices(volume, args.plafond, args.spacing_mm, args.span_mm);
  for (auto& s : stack.slices) s = datapipe::resize_bilinear(s, args.side);
  stack.id = args.id.empty() ? args.input.filename().string() : args.id;
  stack.label = args.label;
  datapipe::write_stack(out, stack);
  std::cout << "wrote " << stack.slices.size() << " slices of " << args.side << "x" << args.side << " px from "
            << volume.size() << " source slices to " << out.string() << "\n";
}

void cmd_train(const ExperimentConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("train needs --manifest (or \"manifest\" in the config)");
  const fs::path out = cfg.out.empty() ? fs::path("run") : cfg.out;
  const auto spec = cfg.model_spec();
  auto train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  train_cfg.validate();

  const auto manifest = datapipe::read_manifest(cfg.manifest);
  const auto train_set = trainer::load_split(cfg.manifest, manifest, Split::train);
  const auto val_set = trainer::load_split(cfg.manifest, manifest, Split::val);
  auto net = netblocks::build(spec, cfg.seed);
  std::cout << "training " << display_name(spec.kind) << " (" << spec.parameter_count() << " parameters, "
            << netblocks::timesteps(spec) << " timesteps) on " << train_set.size() << " scans, validating on "
            << val_set.size() << "\n";

  const auto history = trainer::train(net, train_set, val_set, train_cfg, [&](const trainer::EpochRecord& r) {
    std::printf("epoch %4zu/%zu  train %.4f  val %.4f  auc %s  %.2f s\n", r.epoch, train_cfg.max_epochs,
                r.train_loss, r.val_loss, std::isnan(r.val_auc) ? "n/a" : fixed(r.val_auc, 3).c_str(), r.seconds);
    std::fflush(stdout);
  });

  RunInfo info;
  info.spec = spec;
  info.seed = cfg.seed;
  info.manifest = fs::absolute(cfg.manifest).lexically_normal();
  info.best_epoch = history.best_epoch;
  info.stopped_epoch = history.stopped_epoch;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : val_set) {
    scores.push_back(netblocks::predict(net, s));
    labels.push_back(*s.label);
  }
  if (std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0) {
    info.threshold = evalkit::optimal_threshold(evalkit::roc(scores, labels));
    info.threshold_source = "validation";
  }

  fs::create_directories(out);
  netblocks::save_weights(net, out / kWeightsFile);
  write_text(out / kHistoryFile, trainer::history_csv(history));
  write_text(out / kRunInfoFile, to_json(info).dump(2) + "\n");
  std::cout << "best epoch " << history.best_epoch << " of " << history.stopped_epoch << "; threshold "
            << fixed(info.threshold, 4) << " (" << info.threshold_source << "); wrote " << out.string() << "\n";
}

evalkit::EvalReport evaluate_run(const fs::path& run_dir, const fs::path& manifest, const std::string& split,
                                 std::optional<double> threshold) {
  auto run = load_run(run_dir);
  const fs::path manifest_path = manifest.empty() ? run.info.manifest : manifest;
  if (manifest_path.empty()) throw ConfigError("no manifest given and none recorded in " + run_dir.string());
  const auto m = datapipe::read_manifest(manifest_path);
  const auto stacks = trainer::load_split(manifest_path, m, datapipe::split_from_string(split));
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : stacks) {
    ids.push_back(s.id);
    scores.push_back(netblocks::predict(run.net, s));
    labels.push_back(*s.label);
  }
  return evalkit::make_report(display_name(run.info.spec.kind), split, ids, scores, labels, threshold);
}

void cmd_evaluate(const fs::path& run_dir, const fs::path& manifest, const std::string& split,
                  std::optional<double> threshold, const fs::path& out) {
  const auto report = evaluate_run(run_dir, manifest, split, threshold);
  const fs::path dir = out.empty() ? run_dir : out;
  write_text(dir / "report.json", evalkit::to_json(report).dump(2) + "\n");
  write_text(dir / "roc.csv", evalkit::roc_csv(report.curve));
  const std::vector<evalkit::RocTrace> trace{{report.model, report.curve, report.auc}};
  write_text(dir / "roc.svg", evalkit::roc_svg(trace, report.model + " ROC (" + split + ")"));
  std::cout << evalkit::format_table(report);
  std::cout << "wrote report.json, roc.csv, roc.svg to " << dir.string() << "\n";
}

void cmd_compare(const std::vector<fs::path>& runs, const fs::path& manifest, const std::string& split,
                 const fs::path& out_dir) {
  if (runs.empty()) throw ConfigError("compare needs at least one --run");
  const fs::path out = out_dir.empty() ? fs::path("compare") : out_dir;
  std::vector<evalkit::RocTrace> traces;
  std::vector<trainer::TimingInput> timing;
  for (const auto& run : runs) {
    if (!fs::exists(run / kWeightsFile)) throw InputError("missing weights " + (run / kWeightsFile).string());
    const auto report = evaluate_run(run, manifest, split, std::nullopt);
    const auto info = read_run_info(run);
    const auto name = run.filename().empty() ? run.parent_path().filename() : run.filename();
    write_text(out / name / "report.json", evalkit::to_json(report).dump(2) + "\n");
    write_text(out / name / "roc.csv", evalkit::roc_csv(report.curve));
    std::cout << evalkit::format_table(report);
    traces.push_back({report.model, report.curve, report.auc});
    timing.push_back({report.model, netblocks::timesteps(info.spec),
                      trainer::history_from_csv(read_text(run / kHistoryFile))});
  }
  write_text(out / "roc.svg", evalkit::roc_svg(traces, "ROC, " + split + " split"));
  const auto rows = trainer::epoch_time_report(timing);
  write_text(out / "timing.csv", trainer::timing_csv(rows));
  std::cout << trainer::format_timing_table(rows);
  std::cout << "wrote roc.svg, timing.csv and per-run reports to " << out.string() << "\n";
}

void cmd_infer(const fs::path& run_dir, const fs::path& stack_dir) {
  auto run = load_run(run_dir);
  const auto stack = datapipe::read_stack(stack_dir);
  const auto started = std::chrono::steady_clock::now();
  const double score = netblocks::predict(run.net, stack);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  std::printf("score: %.8f\n", score);
  std::printf("class: %s\n", score >= run.info.threshold ? "unstable" : "control");
  std::printf("threshold: %.8f\n", run.info.threshold);
  std::printf("wall_time_ms: %.3f\n", ms);
}

}  // namespace vsdl::cli
