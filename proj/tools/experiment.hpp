#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "vsdl/netblocks/model_spec.hpp"
#include "vsdl/phantom/phantom.hpp"
#include "vsdl/trainer/trainer.hpp"

namespace vsdl::cli {

/// Everything a subcommand may need, after defaults, the --config file and
/// command-line flags have been applied in that order.
struct ExperimentConfig {
  std::uint64_t seed = 2024;
  std::filesystem::path out;
  std::filesystem::path manifest;
  netblocks::ModelKind kind = netblocks::ModelKind::dcnn_lstm;
  nlohmann::json spec_overrides = nlohmann::json::object();
  trainer::TrainConfig train;
  phantom::PhantomParams phantom;
  std::size_t n_unstable = 48;
  std::size_t n_control = 96;

  /// Desk default for `kind` with `spec_overrides` applied; validated.
  netblocks::ModelSpec model_spec() const;
};

/// Reads a JSON config file. Unknown top-level keys are rejected so typos
/// surface as configuration errors.
nlohmann::json read_config_file(const std::filesystem::path& path);

/// Applies a parsed config document on top of `base`. Relative paths in the
/// document resolve against `base_dir`.
ExperimentConfig apply_config(ExperimentConfig base, const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// "CNN3D", "CNN_LSTM" or "DCNN_LSTM".
std::string display_name(netblocks::ModelKind kind);

/// What `train` records next to the weights.
struct RunInfo {
  netblocks::ModelSpec spec;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::string threshold_source = "default";
  std::filesystem::path manifest;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
};

nlohmann::json to_json(const RunInfo& info);
RunInfo run_info_from_json(const nlohmann::json& doc);

RunInfo read_run_info(const std::filesystem::path& run_dir);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

inline constexpr const char* kRunInfoFile = "model.json";
inline constexpr const char* kWeightsFile = "weights.vsdl";
inline constexpr const char* kHistoryFile = "history.csv";

}  // namespace vsdl::cli
