#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vsdl::datapipe {

enum class Split { train, val, test };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct LabeledEntry {
  std::string id;
  std::string dir;  // relative to the manifest's directory when written to disk
  int label = 0;
};

struct ManifestEntry {
  std::string id;
  std::string dir;
  int label = 0;
  Split split = Split::train;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<ManifestEntry> entries;

  std::size_t count(int label, Split split) const;
  std::vector<ManifestEntry> entries_in(Split split) const;
};

/// Per label: test = round(test_ratio * N), val = round(val_ratio * N),
/// train = remainder, assigned through a seeded shuffle of that label's
/// entries. Entry order of the input is preserved in the output. Throws
/// ConfigError if a label is absent or has fewer than 3 entries.
DatasetManifest stratified_split(std::span<const LabeledEntry> entries, SplitRatios ratios, std::uint64_t seed);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Directory of an entry resolved against the manifest file's location.
std::filesystem::path resolve_entry_dir(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

}  // namespace vsdl::datapipe
