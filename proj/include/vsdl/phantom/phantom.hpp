#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vsdl/datapipe/image.hpp"
#include "vsdl/datapipe/manifest.hpp"

namespace vsdl::phantom {

/// Per-scan random variation. All-zero jitter gives a fully deterministic
/// geometry (only pixel noise remains).
struct PhantomJitter {
  double offset_px = 2.0;         // translation drawn from +-offset_px on each axis
  double rotation_deg = 6.0;      // rotation drawn from +-rotation_deg
  double base_gap_px = 2.5;       // mid-stack gap drawn from base +- this
  double growth_fraction = 0.25;  // unstable growth drawn from mean * (1 +- this)
  double gap_px = 0.15;           // per-slice gap wobble (std), both classes

  static PhantomJitter none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

/// Geometry is defined on a 64 px reference frame and scaled with side_px.
/// base_gap_px is the mean gap at the middle slice for both classes; an
/// unstable scan with growth r starts at mid - 6r and ends at mid + 6r, so a
/// single slice carries no class information beyond what jitter overlaps.
struct PhantomParams {
  std::size_t side_px = 64;
  double base_gap_px = 9.0;
  double gap_growth_px_per_slice = 0.8;
  double noise_std = 0.03;
  PhantomJitter jitter;
  std::uint64_t seed = 0;

  /// Throws ConfigError, including when the worst-case geometry would clip.
  void validate() const;
};

inline constexpr double kSourceSpacingMm = 0.3;

/// Renders 13 slices of a tibia/fibula cross-section pair. The gap between
/// them is constant for label 0 and widens by the growth rate per slice for
/// label 1. Pixels are quantized to 8-bit levels so the stack round-trips
/// through the on-disk format exactly.
datapipe::SliceStack generate_stack(int label, const PhantomParams& params, std::uint64_t seed);

/// Ellipse placement for one scan, in pixel units. Both ellipses rotate
/// together by `rotation_rad` about the image centre.
struct Layout {
  double centre = 0.0;  // rotation pivot (both axes)
  double rotation_rad = 0.0;
  double cy = 0.0;
  double tibia_cx = 0.0, tibia_rx = 0.0, tibia_ry = 0.0;
  double fibula_rx = 0.0, fibula_ry = 0.0;
  std::vector<double> fibula_cx;  // per slice
};

/// The geometry generate_stack renders for (label, seed); consumes the same
/// random draws, so it is exactly the layout of the generated stack.
Layout layout_for(int label, const PhantomParams& params, std::uint64_t seed);

inline constexpr float kBackground = 0.1f;
inline constexpr float kTibiaIntensity = 0.8f;
inline constexpr float kFibulaIntensity = 0.7f;

/// Writes `n_unstable + n_control` stacks under out_dir/scans/ and a
/// stratified manifest at out_dir/manifest.json. The split is computed
/// before anything is written, so an unsplittable cohort leaves no output.
datapipe::DatasetManifest generate_cohort(std::size_t n_unstable, std::size_t n_control, const PhantomParams& params,
                                          std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace vsdl::phantom
