#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "vsdl/error.hpp"

namespace {

using namespace vsdl;
using namespace vsdl::cli;

struct SharedFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON experiment config; flags take precedence");
    cmd->add_option("--seed", seed, "Global seed for every seeded component");
    cmd->add_option("--out", out, "Output directory");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config.empty()) {
      const std::filesystem::path path(config);
      cfg = apply_config(cfg, read_config_file(path), path.parent_path());
    }
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.out = out;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syndesmosis stack classifiers: phantom data, training, evaluation"};
  app.name("vsdl");
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write a labeled phantom cohort and its split manifest");
  SharedFlags gen_flags;
  gen_flags.attach(generate);
  std::optional<std::size_t> n_unstable, n_control, side;
  generate->add_option("--n-unstable", n_unstable, "Unstable scans (default 48)");
  generate->add_option("--n-control", n_control, "Control scans (default 96)");
  generate->add_option("--side", side, "Slice edge in pixels (default 64)");

  auto* preprocess = app.add_subcommand("preprocess", "Turn a directory of axial PGM slices into a model stack");
  SharedFlags pre_flags;
  pre_flags.attach(preprocess);
  PreprocessArgs pre;
  std::string pre_input;
  preprocess->add_option("--input", pre_input, "Directory of source slices, read in name order")->required();
  preprocess->add_option("--plafond", pre.plafond, "Index of the plafond slice")->required();
  preprocess->add_option("--spacing", pre.spacing_mm, "Source slice spacing in mm");
  preprocess->add_option("--span", pre.span_mm, "Span covered by the stack in mm");
  preprocess->add_option("--side", pre.side, "Output slice edge in pixels");
  preprocess->add_option("--id", pre.id, "Stack id (default: input directory name)");
  preprocess->add_option("--label", pre.label, "Known label, 0 or 1")->check(CLI::Range(0, 1));

  auto* train = app.add_subcommand("train", "Train one model on the train split with validation early stopping");
  SharedFlags train_flags;
  train_flags.attach(train);
  std::string train_manifest, model;
  std::optional<std::size_t> max_epochs, patience, batch_size;
  std::optional<double> learning_rate;
  train->add_option("--manifest", train_manifest, "Dataset manifest");
  train->add_option("--model", model, "cnn3d, cnn-lstm or dcnn-lstm");
  train->add_option("--max-epochs", max_epochs, "Epoch limit (default 1000)");
  train->add_option("--patience", patience, "Early-stopping patience in epochs (default 50)");
  train->add_option("--batch-size", batch_size, "Mini-batch size (default 5)");
  train->add_option("--lr", learning_rate, "Adam learning rate (default 0.001)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a split and write report, ROC CSV and ROC SVG");
  SharedFlags eval_flags;
  eval_flags.attach(evaluate);
  std::string eval_run, eval_manifest, eval_split = "test";
  std::optional<double> threshold;
  evaluate->add_option("--run", eval_run, "Directory written by train")->required();
  evaluate->add_option("--manifest", eval_manifest, "Manifest (default: the one used for training)");
  evaluate->add_option("--split", eval_split, "train, val or test");
  evaluate->add_option("--threshold", threshold, "Fixed decision threshold instead of the Youden optimum");

  auto* compare = app.add_subcommand("compare", "Combined ROC plot and epoch-time table for several runs");
  SharedFlags cmp_flags;
  cmp_flags.attach(compare);
  std::vector<std::string> cmp_runs;
  std::string cmp_manifest, cmp_split = "test";
  compare->add_option("--run", cmp_runs, "Run directories (repeatable)")->required();
  compare->add_option("--manifest", cmp_manifest, "Manifest (default: each run's own)");
  compare->add_option("--split", cmp_split, "train, val or test");

  auto* infer = app.add_subcommand("infer", "Classify one stack directory");
  SharedFlags infer_flags;
  infer_flags.attach(infer);
  std::string infer_run, infer_stack;
  infer->add_option("--run", infer_run, "Directory written by train")->required();
  infer->add_option("--stack", infer_stack, "Stack directory (slice_000.pgm .. slice_012.pgm, meta.json)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*generate) {
      auto cfg = gen_flags.resolve();
      if (n_unstable) cfg.n_unstable = *n_unstable;
      if (n_control) cfg.n_control = *n_control;
      if (side) cfg.phantom.side_px = *side;
      cmd_generate(cfg);
    } else if (*preprocess) {
      pre.input = pre_input;
      cmd_preprocess(pre, pre_flags.resolve().out);
    } else if (*train) {
      auto cfg = train_flags.resolve();
      if (!train_manifest.empty()) cfg.manifest = train_manifest;
      if (!model.empty()) cfg.kind = netblocks::model_kind_from_string(model);
      if (max_epochs) cfg.train.max_epochs = *max_epochs;
      if (patience) cfg.train.patience = *patience;
      if (batch_size) cfg.train.batch_size = *batch_size;
      if (learning_rate) cfg.train.learning_rate = *learning_rate;
      cmd_train(cfg);
    } else if (*evaluate) {
      const auto cfg = eval_flags.resolve();
      const auto manifest = eval_manifest.empty() ? cfg.manifest : std::filesystem::path(eval_manifest);
      cmd_evaluate(eval_run, manifest, eval_split, threshold, cfg.out);
    } else if (*compare) {
      const auto cfg = cmp_flags.resolve();
      const auto manifest = cmp_manifest.empty() ? cfg.manifest : std::filesystem::path(cmp_manifest);
      std::vector<std::filesystem::path> runs(cmp_runs.begin(), cmp_runs.end());
      cmd_compare(runs, manifest, cmp_split, cfg.out);
    } else if (*infer) {
      cmd_infer(infer_run, infer_stack);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
