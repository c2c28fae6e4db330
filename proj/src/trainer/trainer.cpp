#include "vsdl/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "vsdl/autodiff/adam.hpp"
#include "vsdl/autodiff/ops.hpp"
#include "vsdl/datapipe/stack_io.hpp"
#include "vsdl/error.hpp"
#include "vsdl/evalkit/metrics.hpp"

namespace vsdl::trainer {

namespace ad = vsdl::autodiff;
using datapipe::SliceStack;
using netblocks::Network;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0,1)");
  if (!(epsilon > 0)) throw ConfigError("Adam epsilon must be positive");
}

namespace {

void check_set(const Network& net, std::span<const SliceStack> set, const char* name) {
  if (set.empty()) throw InputError(std::string(name) + " split is empty");
  for (const auto& s : set) {
    if (!s.label) throw InputError(std::string(name) + " stack '" + s.id + "' has no label");
    if (s.side_px() != net.spec().input_side) {
      throw InputError(std::string(name) + " stack '" + s.id + "' is " + std::to_string(s.side_px()) +
                       " px, model expects " + std::to_string(net.spec().input_side));
    }
  }
}

double validation_auc(const Network& net, std::span<const SliceStack> set, double& loss_out) {
  ad::NoGradGuard no_grad;
  std::vector<double> scores;
  std::vector<int> labels;
  double total = 0.0;
  for (const auto& s : set) {
    auto p = netblocks::forward(net, s);
    total += ad::bce_loss(p, static_cast<float>(*s.label)).item();
    scores.push_back(p.item());
    labels.push_back(*s.label);
  }
  loss_out = total / static_cast<double>(set.size());
  const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
  return both ? evalkit::auc(evalkit::roc(scores, labels)) : std::nan("");
}

}  // namespace

double mean_loss(const Network& net, std::span<const SliceStack> stacks) {
  double loss = 0.0;
  validation_auc(net, stacks, loss);
  return loss;
}

TrainHistory train(Network& net, std::span<const SliceStack> train_set, std::span<const SliceStack> val_set,
                   const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  check_set(net, train_set, "training");
  check_set(net, val_set, "validation");

  const ad::AdamHyperParams hyper{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  std::vector<ad::AdamState<float>> states;
  for (const auto& p : net.parameters()) states.emplace_back(p.tensor.size(), hyper);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  double best_val = std::numeric_limits<double>::infinity();
  auto best_weights = net.snapshot();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(begin + config.batch_size, order.size());
      for (auto& p : net.parameters()) p.tensor.zero_grad();
      std::vector<ad::Tensor> losses;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = train_set[order[i]];
        losses.push_back(ad::bce_loss(netblocks::forward(net, s), static_cast<float>(*s.label)));
      }
      auto batch_loss = ad::mean(losses);
      const double value = batch_loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index + 1));
      }
      loss_sum += value * static_cast<double>(end - begin);
      ad::backward(batch_loss);
      for (std::size_t k = 0; k < states.size(); ++k) {
        auto& tensor = net.parameters()[k].tensor;
        if (!tensor.has_grad()) tensor.mutable_grad();
        ad::adam_step(tensor, tensor.grad(), states[k]);
      }
      ++history.optimizer_steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.val_auc = validation_auc(net, val_set, rec.val_loss);
    if (!std::isfinite(rec.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.records.push_back(rec);
    history.stopped_epoch = epoch;
    if (on_epoch) on_epoch(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      history.best_epoch = epoch;
      best_weights = net.snapshot();
    } else if (epoch - history.best_epoch >= config.patience) {
      break;
    }
  }
  net.restore(best_weights);
  return history;
}

std::vector<SliceStack> load_split(const std::filesystem::path& manifest_path,
                                   const datapipe::DatasetManifest& manifest, datapipe::Split split) {
  std::vector<SliceStack> out;
  for (const auto& e : manifest.entries_in(split)) {
    auto stack = datapipe::read_stack(datapipe::resolve_entry_dir(manifest_path, e));
    stack.id = e.id;
    stack.label = e.label;
    out.push_back(std::move(stack));
  }
  return out;
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_auc,seconds\n";
  char buf[160];
  for (const auto& r : history.records) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.6f\n", r.epoch, r.train_loss, r.val_loss, r.val_auc,
                  r.seconds);
    out << buf;
  }
  return out.str();
}

TrainHistory history_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,val_loss,val_auc,seconds") {
    throw InputError("history CSV: missing header");
  }
  TrainHistory h;
  double best = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw InputError("history CSV: malformed row '" + line + "'");
    try {
      r.epoch = std::stoul(fields[0]);
      r.train_loss = std::stod(fields[1]);
      r.val_loss = std::stod(fields[2]);
      r.val_auc = std::stod(fields[3]);
      r.seconds = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw InputError("history CSV: malformed row '" + line + "'");
    }
    if (r.val_loss < best) {
      best = r.val_loss;
      h.best_epoch = r.epoch;
    }
    h.stopped_epoch = r.epoch;
    h.records.push_back(r);
  }
  return h;
}

std::vector<TimingRow> epoch_time_report(std::span<const TimingInput> inputs) {
  std::vector<TimingRow> rows;
  for (const auto& in : inputs) {
    TimingRow row{in.model, in.timesteps, in.history.records.size(), 0.0};
    for (const auto& r : in.history.records) row.mean_seconds += r.seconds;
    if (row.epochs > 0) row.mean_seconds /= static_cast<double>(row.epochs);
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TimingRow& a, const TimingRow& b) { return a.mean_seconds < b.mean_seconds; });
  return rows;
}

std::string format_timing_table(std::span<const TimingRow> rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %9s %7s %14s\n", "model", "timesteps", "epochs", "s/epoch (mean)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %9zu %7zu %14.3f\n", r.model.c_str(), r.timesteps, r.epochs, r.mean_seconds);
    out << buf;
  }
  return out.str();
}

std::string timing_csv(std::span<const TimingRow> rows) {
  std::ostringstream out;
  out << "model,timesteps,epochs,mean_seconds\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6f\n", r.model.c_str(), r.timesteps, r.epochs, r.mean_seconds);
    out << buf;
  }
  return out.str();
}

}  // namespace vsdl::trainer
