#pragma once

#include <span>
#include <vector>

#include "vsdl/datapipe/image.hpp"

namespace vsdl::datapipe {

/// Offsets from the plafond slice: round(k * span / ((count - 1) * spacing)).
std::vector<std::size_t> slice_offsets(double spacing_mm, double span_mm, std::size_t count);

/// Picks `count` evenly spaced slices covering `span_mm` proximal of the
/// plafond, inclusive of both ends. Throws RangeError (reporting the
/// available millimetres) when the volume is too short.
SliceStack select_slices(std::span<const Image> volume, std::size_t plafond_index, double spacing_mm,
                         double span_mm = 50.0, std::size_t count = kStackSlices);

/// Bilinear resampling to out_side x out_side with half-pixel centres.
Image resize_bilinear(const Image& image, std::size_t out_side);

Image normalize(const RawImage& image);
RawImage denormalize(const Image& image);

/// Pixel-wise successive differences slice[k+1] - slice[k]; N-1 frames.
std::vector<Image> differential(std::span<const Image> slices);
std::vector<Image> differential(const SliceStack& stack);

}  // namespace vsdl::datapipe
