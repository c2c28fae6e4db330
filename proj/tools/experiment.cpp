#include "experiment.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include "vsdl/error.hpp"

namespace vsdl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void take(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

fs::path resolve(const fs::path& p, const fs::path& base_dir) { return p.is_absolute() ? p : base_dir / p; }

}  // namespace

json read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file " + path.string() + ": " + e.what());
  }
}

ExperimentConfig apply_config(ExperimentConfig base, const json& doc, const fs::path& base_dir) {
  reject_unknown(doc, {"seed", "out", "manifest", "model", "spec", "train", "phantom"}, "config");
  try {
    take(doc, "seed", base.seed);
    if (doc.contains("out")) base.out = resolve(doc.at("out").get<std::string>(), base_dir);
    if (doc.contains("manifest")) base.manifest = resolve(doc.at("manifest").get<std::string>(), base_dir);
    if (doc.contains("model")) base.kind = netblocks::model_kind_from_string(doc.at("model").get<std::string>());
    if (doc.contains("spec")) {
      reject_unknown(doc.at("spec"), {"input_side", "extractor", "lstm_layers", "lstm_hidden", "head"}, "spec");
      base.spec_overrides.merge_patch(doc.at("spec"));
    }
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      reject_unknown(t, {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "patience"},
                     "train");
      take(t, "learning_rate", base.train.learning_rate);
      take(t, "beta1", base.train.beta1);
      take(t, "beta2", base.train.beta2);
      take(t, "epsilon", base.train.epsilon);
      take(t, "batch_size", base.train.batch_size);
      take(t, "max_epochs", base.train.max_epochs);
      take(t, "patience", base.train.patience);
    }
    if (doc.contains("phantom")) {
      const auto& p = doc.at("phantom");
      reject_unknown(p,
                     {"side_px", "base_gap_px", "gap_growth_px_per_slice", "noise_std", "jitter", "n_unstable",
                      "n_control"},
                     "phantom");
      take(p, "side_px", base.phantom.side_px);
      take(p, "base_gap_px", base.phantom.base_gap_px);
      take(p, "gap_growth_px_per_slice", base.phantom.gap_growth_px_per_slice);
      take(p, "noise_std", base.phantom.noise_std);
      take(p, "n_unstable", base.n_unstable);
      take(p, "n_control", base.n_control);
      if (p.contains("jitter")) {
        const auto& j = p.at("jitter");
        reject_unknown(j, {"offset_px", "rotation_deg", "base_gap_px", "growth_fraction", "gap_px"}, "phantom.jitter");
        take(j, "offset_px", base.phantom.jitter.offset_px);
        take(j, "rotation_deg", base.phantom.jitter.rotation_deg);
        take(j, "base_gap_px", base.phantom.jitter.base_gap_px);
        take(j, "growth_fraction", base.phantom.jitter.growth_fraction);
        take(j, "gap_px", base.phantom.jitter.gap_px);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  return base;
}

netblocks::ModelSpec ExperimentConfig::model_spec() const {
  json doc = netblocks::to_json(netblocks::ModelSpec::desk_default(kind));
  doc.merge_patch(spec_overrides);
  auto spec = netblocks::model_spec_from_json(doc);
  spec.validate();
  return spec;
}

std::string display_name(netblocks::ModelKind kind) {
  switch (kind) {
    case netblocks::ModelKind::cnn3d:
      return "CNN3D";
    case netblocks::ModelKind::cnn_lstm:
      return "CNN_LSTM";
    case netblocks::ModelKind::dcnn_lstm:
      return "DCNN_LSTM";
  }
  return "?";
}

json to_json(const RunInfo& info) {
  return {{"spec", netblocks::to_json(info.spec)},
          {"seed", info.seed},
          {"threshold", info.threshold},
          {"threshold_source", info.threshold_source},
          {"manifest", info.manifest.generic_string()},
          {"best_epoch", info.best_epoch},
          {"stopped_epoch", info.stopped_epoch}};
}

RunInfo run_info_from_json(const json& doc) {
  try {
    RunInfo info;
    info.spec = netblocks::model_spec_from_json(doc.at("spec"));
    info.seed = doc.at("seed").get<std::uint64_t>();
    info.threshold = doc.at("threshold").get<double>();
    info.threshold_source = doc.value("threshold_source", std::string("default"));
    info.manifest = doc.value("manifest", std::string());
    info.best_epoch = doc.value("best_epoch", std::size_t{0});
    info.stopped_epoch = doc.value("stopped_epoch", std::size_t{0});
    return info;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed run description: ") + e.what());
  }
}

RunInfo read_run_info(const fs::path& run_dir) {
  const auto path = run_dir / kRunInfoFile;
  std::ifstream in(path);
  if (!in) throw InputError("missing run description " + path.string());
  try {
    return run_info_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InputError("malformed " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace vsdl::cli
