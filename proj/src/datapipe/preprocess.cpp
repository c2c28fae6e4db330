#include "vsdl/datapipe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "vsdl/error.hpp"

namespace vsdl::datapipe {

std::vector<std::size_t> slice_offsets(double spacing_mm, double span_mm, std::size_t count) {
  if (count == 0) throw ConfigError("slice count must be positive");
  if (!(spacing_mm > 0.0)) throw ConfigError("slice spacing must be positive");
  if (span_mm < 0.0) throw ConfigError("span must be non-negative");
  std::vector<std::size_t> offsets(count, 0);
  if (count == 1) return offsets;
  const double step = span_mm / (static_cast<double>(count - 1) * spacing_mm);
  for (std::size_t k = 0; k < count; ++k) {
    offsets[k] = static_cast<std::size_t>(std::llround(static_cast<double>(k) * step));
  }
  return offsets;
}

SliceStack select_slices(std::span<const Image> volume, std::size_t plafond_index, double spacing_mm,
                         double span_mm, std::size_t count) {
  if (plafond_index >= volume.size()) {
    throw RangeError("plafond index " + std::to_string(plafond_index) + " outside volume of " +
                     std::to_string(volume.size()) + " slices");
  }
  const auto offsets = slice_offsets(spacing_mm, span_mm, count);
  const std::size_t last = plafond_index + offsets.back();
  if (last >= volume.size()) {
    const double available = static_cast<double>(volume.size() - 1 - plafond_index) * spacing_mm;
    std::ostringstream msg;
    msg << "volume extends only " << available << " mm proximal of the plafond (slice " << plafond_index
        << "), " << span_mm << " mm requested";
    throw RangeError(msg.str());
  }
  SliceStack stack;
  stack.spacing_mm = spacing_mm;
  stack.plafond_index = static_cast<int>(plafond_index);
  stack.slices.reserve(count);
  for (auto off : offsets) stack.slices.push_back(volume[plafond_index + off]);
  return stack;
}

Image resize_bilinear(const Image& image, std::size_t out_side) {
  if (image.height < 2 || image.width < 2) {
    throw InputError("resize_bilinear: input must be at least 2x2, got " + std::to_string(image.height) + "x" +
                     std::to_string(image.width));
  }
  if (image.pixels.size() != image.height * image.width) throw InputError("resize_bilinear: malformed image");
  if (out_side == 0) throw ConfigError("resize_bilinear: output side must be positive");

  auto source_coord = [](std::size_t dst, std::size_t in, std::size_t out) {
    const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };

  Image out(out_side, out_side);
  for (std::size_t y = 0; y < out_side; ++y) {
    const double sy = source_coord(y, image.height, out_side);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const auto ay = static_cast<float>(sy - static_cast<double>(y0));
    for (std::size_t x = 0; x < out_side; ++x) {
      const double sx = source_coord(x, image.width, out_side);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const auto ax = static_cast<float>(sx - static_cast<double>(x0));
      // Difference form keeps constant regions exactly constant.
      const float p00 = image.at(y0, x0), p01 = image.at(y0, x1);
      const float p10 = image.at(y1, x0), p11 = image.at(y1, x1);
      const float top = p00 + ax * (p01 - p00);
      const float bottom = p10 + ax * (p11 - p10);
      out.at(y, x) = top + ay * (bottom - top);
    }
  }
  return out;
}

Image normalize(const RawImage& image) {
  if (image.values.size() != image.height * image.width) throw InputError("normalize: malformed image");
  Image out(image.height, image.width);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    const int v = image.values[i];
    if (v < 0 || v > 255) {
      throw InputError("normalize: pixel value " + std::to_string(v) + " outside [0,255] at index " +
                       std::to_string(i));
    }
    out.pixels[i] = static_cast<float>(v) / 255.0f;
  }
  return out;
}

RawImage denormalize(const Image& image) {
  RawImage out{image.height, image.width, std::vector<int>(image.pixels.size())};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const float p = image.pixels[i];
    if (!(p >= 0.0f && p <= 1.0f)) {
      throw InputError("denormalize: value " + std::to_string(p) + " outside [0,1] at index " + std::to_string(i));
    }
    out.values[i] = static_cast<int>(std::lround(static_cast<double>(p) * 255.0));
  }
  return out;
}

std::vector<Image> differential(std::span<const Image> slices) {
  if (slices.size() < 2) {
    throw InputError("differential: need at least 2 slices, got " + std::to_string(slices.size()));
  }
  const std::size_t h = slices.front().height, w = slices.front().width;
  std::vector<Image> frames;
  frames.reserve(slices.size() - 1);
  for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
    const Image& a = slices[k];
    const Image& b = slices[k + 1];
    if (a.height != h || a.width != w || b.height != h || b.width != w) {
      throw InputError("differential: slices have differing dimensions");
    }
    Image d(h, w);
    for (std::size_t i = 0; i < d.pixels.size(); ++i) d.pixels[i] = b.pixels[i] - a.pixels[i];
    frames.push_back(std::move(d));
  }
  return frames;
}

std::vector<Image> differential(const SliceStack& stack) { return differential(std::span<const Image>(stack.slices)); }

}  // namespace vsdl::datapipe
