#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vsdl/datapipe/image.hpp"
#include "vsdl/datapipe/manifest.hpp"
#include "vsdl/netblocks/network.hpp"

namespace vsdl::trainer {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 5;
  std::size_t max_epochs = 1000;
  std::size_t patience = 50;  // epochs without a validation-loss improvement
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_auc = 0.0;  // NaN when the validation set holds a single class
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;
  std::size_t optimizer_steps = 0;  // Adam updates applied to each parameter
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch BCE training with Adam and early stopping on validation loss.
///
/// Each epoch shuffles the training set with a generator seeded once from
/// config.seed, keeps the last short batch, and validates without touching
/// the weights. On return `net` holds the weights of the best epoch.
/// Throws InputError for empty or mismatched data and NumericError (with
/// epoch and batch) on a non-finite loss.
TrainHistory train(netblocks::Network& net, std::span<const datapipe::SliceStack> train_set,
                   std::span<const datapipe::SliceStack> val_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Loads the stacks of one split; labels come from the manifest.
std::vector<datapipe::SliceStack> load_split(const std::filesystem::path& manifest_path,
                                             const datapipe::DatasetManifest& manifest, datapipe::Split split);

/// Mean BCE of `net` over `stacks` without building gradient lineage.
double mean_loss(const netblocks::Network& net, std::span<const datapipe::SliceStack> stacks);

/// CSV with header epoch,train_loss,val_loss,val_auc,seconds. The seconds
/// column is the only wall-clock field.
std::string history_csv(const TrainHistory& history);
TrainHistory history_from_csv(const std::string& text);

struct TimingInput {
  std::string model;
  std::size_t timesteps = 0;
  TrainHistory history;
};

struct TimingRow {
  std::string model;
  std::size_t timesteps = 0;
  std::size_t epochs = 0;
  double mean_seconds = 0.0;
};

/// Mean seconds per epoch for each model, sorted ascending.
std::vector<TimingRow> epoch_time_report(std::span<const TimingInput> inputs);
std::string format_timing_table(std::span<const TimingRow> rows);
std::string timing_csv(std::span<const TimingRow> rows);

}  // namespace vsdl::trainer
