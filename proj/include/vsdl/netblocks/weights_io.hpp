#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vsdl/error.hpp"
#include "vsdl/netblocks/network.hpp"

namespace vsdl::netblocks {

// Weight file layout, all integers little-endian:
//   "VSDL" | u32 version | u32 tensor count |
//   per tensor: u16 name length, UTF-8 name, u8 rank, u32 dims[rank], f32 values[]
// Anything after the last tensor is an error.
inline constexpr char kWeightMagic[4] = {'V', 'S', 'D', 'L'};
inline constexpr std::uint32_t kWeightFormatVersion = 1;

class WeightFormatError : public InputError {
 public:
  using InputError::InputError;
};
class BadMagicError : public WeightFormatError {
 public:
  using WeightFormatError::WeightFormatError;
};
class VersionMismatchError : public WeightFormatError {
 public:
  using WeightFormatError::WeightFormatError;
};
class TruncatedFileError : public WeightFormatError {
 public:
  using WeightFormatError::WeightFormatError;
};
class TrailingBytesError : public WeightFormatError {
 public:
  using WeightFormatError::WeightFormatError;
};
/// A tensor is missing, unexpected, or has the wrong shape; the message names it.
class WeightMismatchError : public WeightFormatError {
 public:
  using WeightFormatError::WeightFormatError;
};

std::vector<std::uint8_t> encode_weights(const Network& net);
Network decode_weights(const ModelSpec& spec, const std::vector<std::uint8_t>& bytes);

void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const ModelSpec& spec, const std::filesystem::path& path);

}  // namespace vsdl::netblocks
