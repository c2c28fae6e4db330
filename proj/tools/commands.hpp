#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "vsdl/evalkit/report.hpp"

namespace vsdl::cli {

void cmd_generate(const ExperimentConfig& cfg);

struct PreprocessArgs {
  std::filesystem::path input;
  int plafond = 0;
  double spacing_mm = 0.3;
  double span_mm = 50.0;
  std::size_t side = 64;
  std::string id;
  std::optional<int> label;
};
void cmd_preprocess(const PreprocessArgs& args, const std::filesystem::path& out);

void cmd_train(const ExperimentConfig& cfg);

/// Scores `split` of the manifest with the run's weights. An empty
/// `manifest` falls back to the one recorded by train.
evalkit::EvalReport evaluate_run(const std::filesystem::path& run_dir, const std::filesystem::path& manifest,
                                 const std::string& split, std::optional<double> threshold);

void cmd_evaluate(const std::filesystem::path& run_dir, const std::filesystem::path& manifest,
                  const std::string& split, std::optional<double> threshold, const std::filesystem::path& out);

void cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& manifest,
                 const std::string& split, const std::filesystem::path& out);

void cmd_infer(const std::filesystem::path& run_dir, const std::filesystem::path& stack_dir);

}  // namespace vsdl::cli
