#include "vsdl/datapipe/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>

#include "vsdl/error.hpp"

namespace vsdl::datapipe {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
  }
  return "train";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw InputError("unknown split '" + name + "' (expected train, val or test)");
}

std::size_t DatasetManifest::count(int label, Split split) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) {
    return e.label == label && e.split == split;
  }));
}

std::vector<ManifestEntry> DatasetManifest::entries_in(Split split) const {
  std::vector<ManifestEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const ManifestEntry& e) { return e.split == split; });
  return out;
}

DatasetManifest stratified_split(std::span<const LabeledEntry> entries, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.ratios = ratios;
  manifest.entries.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.label != 0 && e.label != 1) throw ConfigError("entry '" + e.id + "' has label outside {0,1}");
    manifest.entries.push_back({e.id, e.dir, e.label, Split::train});
  }

  std::mt19937_64 rng(seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].label == label) members.push_back(i);
    }
    if (members.size() < 3) {
      throw ConfigError("label " + std::to_string(label) + " has " + std::to_string(members.size()) +
                        " entries; stratified split needs at least 3");
    }
    const double n = static_cast<double>(members.size());
    const auto n_test = static_cast<std::size_t>(std::llround(ratios.test * n));
    const auto n_val = static_cast<std::size_t>(std::llround(ratios.val * n));
    if (n_test + n_val > members.size()) throw ConfigError("split ratios leave no room for training entries");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& target = manifest.entries[members[k]].split;
      target = k < n_test ? Split::test : (k < n_test + n_val ? Split::val : Split::train);
    }
  }
  return manifest;
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  json doc;
  doc["seed"] = manifest.seed;
  doc["ratios"] = {manifest.ratios.train, manifest.ratios.val, manifest.ratios.test};
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"id", e.id}, {"dir", e.dir}, {"label", e.label}, {"split", to_string(e.split)}});
  }
  doc["entries"] = std::move(entries);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  try {
    const json doc = json::parse(in);
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    const auto& r = doc.at("ratios");
    manifest.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    for (const auto& e : doc.at("entries")) {
      manifest.entries.push_back({e.at("id").get<std::string>(), e.at("dir").get<std::string>(),
                                  e.at("label").get<int>(), split_from_string(e.at("split").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw InputError("malformed manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

fs::path resolve_entry_dir(const fs::path& manifest_path, const ManifestEntry& entry) {
  fs::path dir(entry.dir);
  if (dir.is_absolute()) return dir;
  return manifest_path.parent_path() / dir;
}

}  // namespace vsdl::datapipe
