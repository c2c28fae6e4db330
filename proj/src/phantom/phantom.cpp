#include "vsdl/phantom/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vsdl/datapipe/stack_io.hpp"
#include "vsdl/error.hpp"

namespace vsdl::phantom {

namespace fs = std::filesystem;
using datapipe::Image;
using datapipe::SliceStack;

namespace {

// Reference-frame (64 px) ellipse radii.
constexpr double kTibiaRx = 10.0, kTibiaRy = 12.0;
constexpr double kFibulaRx = 5.0, kFibulaRy = 6.0;
constexpr int kSupersample = 4;

double scale_of(const PhantomParams& p) { return static_cast<double>(p.side_px) / 64.0; }

constexpr double kMidSlice = (datapipe::kStackSlices - 1) / 2.0;

// Places the pair symmetrically about the centre at the nominal mid gap.
double nominal_tibia_cx(const PhantomParams& p) {
  const double width = 2 * kTibiaRx + p.base_gap_px + 2 * kFibulaRx;
  return 32.0 - width / 2 + kTibiaRx;
}

// Largest distance from (0,0) of an axis-aligned ellipse centred at (cx,cy).
double ellipse_reach(double cx, double cy, double rx, double ry) {
  double best = 0.0;
  for (int k = 0; k < 720; ++k) {
    const double t = k * std::numbers::pi / 360.0;
    best = std::max(best, std::hypot(cx + rx * std::cos(t), cy + ry * std::sin(t)));
  }
  return best;
}

double symmetric(std::mt19937_64& rng, double range) {
  if (range == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-range, range)(rng);
}

Layout draw_layout(int label, const PhantomParams& p, std::mt19937_64& rng) {
  const auto& j = p.jitter;
  const double s = scale_of(p);
  const double dx = symmetric(rng, j.offset_px);
  const double dy = symmetric(rng, j.offset_px);
  const double rotation = symmetric(rng, j.rotation_deg) * std::numbers::pi / 180.0;
  const double mid_gap = p.base_gap_px + symmetric(rng, j.base_gap_px);
  const double growth = label == 1 ? p.gap_growth_px_per_slice * (1.0 + symmetric(rng, j.growth_fraction)) : 0.0;
  const double base_gap = mid_gap - growth * kMidSlice;

  Layout l;
  l.centre = 32.0 * s;
  l.rotation_rad = rotation;
  l.cy = (32.0 + dy) * s;
  l.tibia_cx = (nominal_tibia_cx(p) + dx) * s;
  l.tibia_rx = kTibiaRx * s;
  l.tibia_ry = kTibiaRy * s;
  l.fibula_rx = kFibulaRx * s;
  l.fibula_ry = kFibulaRy * s;
  std::normal_distribution<double> wobble(0.0, j.gap_px > 0 ? j.gap_px : 1.0);
  for (std::size_t i = 0; i < datapipe::kStackSlices; ++i) {
    double gap = base_gap + growth * static_cast<double>(i);
    if (j.gap_px > 0) gap += wobble(rng);
    gap = std::max(gap, 0.0);
    l.fibula_cx.push_back((nominal_tibia_cx(p) + dx + kTibiaRx + gap + kFibulaRx) * s);
  }
  return l;
}

bool inside(double u, double v, double cx, double cy, double rx, double ry) {
  const double a = (u - cx) / rx;
  const double b = (v - cy) / ry;
  return a * a + b * b <= 1.0;
}

Image render_slice(const Layout& l, std::size_t slice, std::size_t side) {
  Image img(side, side);
  const double c = std::cos(l.rotation_rad), sn = std::sin(l.rotation_rad);
  const double weight = 1.0 / (kSupersample * kSupersample);
  const double fcx = l.fibula_cx[slice];
  for (std::size_t row = 0; row < side; ++row) {
    for (std::size_t col = 0; col < side; ++col) {
      double tibia = 0.0, fibula = 0.0;
      for (int sy = 0; sy < kSupersample; ++sy) {
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double x = static_cast<double>(col) + (sx + 0.5) / kSupersample - l.centre;
          const double y = static_cast<double>(row) + (sy + 0.5) / kSupersample - l.centre;
          // Inverse rotation into the unrotated layout frame.
          const double u = c * x + sn * y + l.centre;
          const double v = -sn * x + c * y + l.centre;
          if (inside(u, v, l.tibia_cx, l.cy, l.tibia_rx, l.tibia_ry)) {
            tibia += weight;
          } else if (inside(u, v, fcx, l.cy, l.fibula_rx, l.fibula_ry)) {
            fibula += weight;
          }
        }
      }
      img.at(row, col) = static_cast<float>(kBackground + tibia * (kTibiaIntensity - kBackground) +
                                            fibula * (kFibulaIntensity - kBackground));
    }
  }
  return img;
}

float quantize(double v) {
  const long level = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<float>(level) / 255.0f;
}

}  // namespace

void PhantomParams::validate() const {
  if (side_px < 16) throw ConfigError("phantom side_px must be at least 16, got " + std::to_string(side_px));
  if (noise_std < 0) throw ConfigError("phantom noise_std must be non-negative");
  if (!(gap_growth_px_per_slice > 0)) throw ConfigError("phantom gap growth must be strictly positive");
  const auto& j = jitter;
  if (j.offset_px < 0 || j.rotation_deg < 0 || j.base_gap_px < 0 || j.growth_fraction < 0 || j.gap_px < 0) {
    throw ConfigError("phantom jitter ranges must be non-negative");
  }
  if (j.growth_fraction >= 1.0) throw ConfigError("phantom growth_fraction must be below 1");

  const double max_half_span = gap_growth_px_per_slice * (1.0 + j.growth_fraction) * kMidSlice;
  if (!(base_gap_px - j.base_gap_px - max_half_span > 0)) {
    throw ConfigError("phantom first-slice gap can reach zero: mid gap " + std::to_string(base_gap_px) + " -" +
                      std::to_string(j.base_gap_px) + " jitter, growth half-span " + std::to_string(max_half_span));
  }

  // Worst-case distance from the image centre (reference frame), which
  // rotation preserves, must leave half a pixel of margin.
  const double max_gap = base_gap_px + j.base_gap_px + max_half_span + 3.0 * j.gap_px;
  const double tibia_cx = nominal_tibia_cx(*this);
  const double fib_dx = tibia_cx + j.offset_px + kTibiaRx + max_gap + kFibulaRx - 32.0;
  const double tib_dx = 32.0 - (tibia_cx - j.offset_px);
  const double reach = std::max(ellipse_reach(fib_dx, j.offset_px, kFibulaRx, kFibulaRy),
                                ellipse_reach(tib_dx, j.offset_px, kTibiaRx, kTibiaRy));
  if (reach > 31.5) {
    throw ConfigError("phantom geometry exceeds image bounds (reach " + std::to_string(reach * scale_of(*this)) +
                      " px from centre, limit " + std::to_string(31.5 * scale_of(*this)) + ")");
  }
}

Layout layout_for(int label, const PhantomParams& params, std::uint64_t seed) {
  if (label != 0 && label != 1) throw ConfigError("phantom label must be 0 or 1");
  params.validate();
  std::mt19937_64 rng(seed);
  return draw_layout(label, params, rng);
}

SliceStack generate_stack(int label, const PhantomParams& params, std::uint64_t seed) {
  if (label != 0 && label != 1) throw ConfigError("phantom label must be 0 or 1");
  params.validate();
  std::mt19937_64 rng(seed);
  const Layout layout = draw_layout(label, params, rng);
  std::normal_distribution<double> noise(0.0, params.noise_std > 0 ? params.noise_std : 1.0);

  SliceStack stack;
  stack.spacing_mm = kSourceSpacingMm;
  stack.plafond_index = 0;
  stack.label = label;
  stack.slices.reserve(datapipe::kStackSlices);
  for (std::size_t k = 0; k < datapipe::kStackSlices; ++k) {
    Image img = render_slice(layout, k, params.side_px);
    for (auto& v : img.pixels) {
      const double n = params.noise_std > 0 ? noise(rng) : 0.0;
      v = quantize(static_cast<double>(v) + n);
    }
    stack.slices.push_back(std::move(img));
  }
  return stack;
}

datapipe::DatasetManifest generate_cohort(std::size_t n_unstable, std::size_t n_control, const PhantomParams& params,
                                          std::uint64_t seed, const fs::path& out_dir) {
  if (n_unstable < 1 || n_control < 1) throw ConfigError("cohort needs at least one scan per class");
  params.validate();

  std::vector<datapipe::LabeledEntry> entries;
  std::vector<std::uint64_t> seeds;
  std::mt19937_64 rng(seed);
  char buf[64];
  for (std::size_t i = 0; i < n_unstable + n_control; ++i) {
    const bool unstable = i < n_unstable;
    std::snprintf(buf, sizeof buf, "%s_%03zu", unstable ? "unstable" : "control", unstable ? i : i - n_unstable);
    entries.push_back({buf, (fs::path("scans") / buf).generic_string(), unstable ? 1 : 0});
    seeds.push_back(rng());
  }
  auto manifest = datapipe::stratified_split(entries, {}, seed);

  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto stack = generate_stack(entries[i].label, params, seeds[i]);
    stack.id = entries[i].id;
    try {
      datapipe::write_stack(out_dir / entries[i].dir, stack);
    } catch (const Error& e) {
      throw IoError("writing phantom scan '" + entries[i].id + "' under " + out_dir.string() + ": " + e.what());
    }
  }
  datapipe::write_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

}  // namespace vsdl::phantom
