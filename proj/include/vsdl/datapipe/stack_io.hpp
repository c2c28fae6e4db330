#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vsdl/datapipe/image.hpp"

namespace vsdl::datapipe {

// Binary PGM (P5), 8 bits per pixel, maxval 255.
RawImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RawImage& image);

/// File name of slice k inside a stack directory: slice_000.pgm, slice_001.pgm, ...
std::string slice_file_name(std::size_t index);

/// Writes slices as 8-bit PGMs plus meta.json {id, spacing_mm, plafond_index, label?}.
void write_stack(const std::filesystem::path& dir, const SliceStack& stack);

/// Reads a stack directory and normalizes it to [0,1]. A missing slice is
/// an InputError naming the file.
SliceStack read_stack(const std::filesystem::path& dir, std::size_t expected_slices = kStackSlices);

/// Loads every *.pgm in `dir` in lexicographic order, normalized.
std::vector<Image> read_volume(const std::filesystem::path& dir);

}  // namespace vsdl::datapipe
