#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace vsdl::datapipe {

inline constexpr std::size_t kStackSlices = 13;

/// Row-major single-channel float image.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, float fill = 0.0f) : height(h), width(w), pixels(h * w, fill) {}

  float& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  float at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
  bool operator==(const Image&) const = default;
};

/// Integer-valued image as read from an 8-bit file, before normalization.
struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> values;

  bool operator==(const RawImage&) const = default;
};

/// Ordered slices (distal to proximal, first slice at the plafond) forming
/// one model input.
struct SliceStack {
  std::string id;
  std::vector<Image> slices;
  double spacing_mm = 0.0;
  int plafond_index = 0;
  std::optional<int> label;

  std::size_t side_px() const { return slices.empty() ? 0 : slices.front().width; }
  bool operator==(const SliceStack&) const = default;
};

}  // namespace vsdl::datapipe
