#include <doctest.h>

#include <cmath>
#include <random>

#include "tempdir.hpp"
#include "vsdl/datapipe/preprocess.hpp"
#include "vsdl/datapipe/stack_io.hpp"
#include "vsdl/error.hpp"
#include "vsdl/phantom/phantom.hpp"

using namespace vsdl;
using namespace vsdl::phantom;
using datapipe::Image;
using vsdl::testing::TempDir;

namespace {

PhantomParams clean() {
  PhantomParams p;
  p.noise_std = 0.0;
  p.jitter = PhantomJitter::none();
  return p;
}

double abs_mass(const std::vector<Image>& frames) {
  double total = 0.0;
  for (const auto& f : frames)
    for (float v : f.pixels) total += std::abs(v);
  return total;
}

std::string tree_bytes(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += std::filesystem::relative(f, root).string() + '\n' + vsdl::testing::read_file(f);
  return all;
}

}  // namespace

TEST_CASE("clean control stack has identical slices and zero differentials") {
  auto s = generate_stack(0, clean(), 3);
  REQUIRE(s.slices.size() == 13);
  for (const auto& img : s.slices) CHECK(img == s.slices[0]);
  for (const auto& d : datapipe::differential(s))
    for (float v : d.pixels) CHECK(v == 0.0f);
  CHECK(s.label == 0);
  CHECK(s.spacing_mm == kSourceSpacingMm);
  CHECK(s.side_px() == 64);
}

TEST_CASE("clean unstable differentials live only where the fibula moved") {
  const auto p = clean();
  auto s = generate_stack(1, p, 4);
  auto l = layout_for(1, p, 4);
  auto d = datapipe::differential(s);
  const double tibia_edge = l.tibia_cx + l.tibia_rx;
  for (std::size_t i = 1; i < 13; ++i) {
    REQUIRE(l.fibula_cx[i] > l.fibula_cx[i - 1]);
    const auto& f = d[i - 1];
    const double lo = l.fibula_cx[i - 1] - l.fibula_rx - 1.0, hi = l.fibula_cx[i] + l.fibula_rx + 1.0;
    double gap_sum = 0.0;
    std::size_t gap_n = 0;
    for (std::size_t r = 0; r < 64; ++r) {
      for (std::size_t c = 0; c < 64; ++c) {
        const double x = c + 0.5, y = r + 0.5;
        const bool in_box = x >= lo && x <= hi && std::abs(y - l.cy) <= l.fibula_ry + 1.0;
        if (!in_box) CHECK(f.at(r, c) == 0.0f);
        // Gap band: between the tibia edge and the current fibula centre.
        if (std::abs(y - l.cy) <= l.fibula_ry && c >= tibia_edge && c + 1 <= l.fibula_cx[i]) {
          gap_sum += f.at(r, c);
          ++gap_n;
        }
      }
    }
    REQUIRE(gap_n > 0);
    CHECK(gap_sum / static_cast<double>(gap_n) < 0.0);
  }
}

TEST_CASE("differential mass certifies the class on jitter-free geometry") {
  auto p = clean();
  p.jitter.offset_px = 2.0;
  p.jitter.rotation_deg = 6.0;
  p.jitter.base_gap_px = 2.5;
  p.jitter.growth_fraction = 0.25;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(abs_mass(datapipe::differential(generate_stack(0, p, seed))) == 0.0);
    CHECK(abs_mass(datapipe::differential(generate_stack(1, p, seed))) > 0.0);
  }
}

TEST_CASE("middle slice looks the same for both classes") {
  auto p = PhantomParams{};
  p.noise_std = 0.0;
  p.jitter.gap_px = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto a = generate_stack(0, p, seed), b = generate_stack(1, p, seed);
    CHECK(a.slices[6] == b.slices[6]);
    CHECK(a.slices[0] != b.slices[0]);
  }
}

TEST_CASE("generate_stack is deterministic and quantized to 8-bit levels") {
  PhantomParams p;
  for (int label : {0, 1}) {
    auto a = generate_stack(label, p, 77), b = generate_stack(label, p, 77), c = generate_stack(label, p, 78);
    CHECK(a == b);
    CHECK(a != c);
    for (const auto& img : a.slices) {
      for (float v : img.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        CHECK(std::abs(v * 255.0f - std::round(v * 255.0f)) < 1e-3f);
      }
    }
    CHECK(datapipe::normalize(datapipe::denormalize(a.slices[3])) == a.slices[3]);
  }
}

TEST_CASE("default geometry never touches the border") {
  PhantomParams p;
  p.noise_std = 0.0;
  p.jitter.offset_px = 2.0;
  const float bg = datapipe::normalize(datapipe::denormalize(Image(1, 1, kBackground))).pixels[0];
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto s = generate_stack(static_cast<int>(seed % 2), p, seed);
    for (const auto& img : s.slices) {
      for (std::size_t k = 0; k < 64; ++k) {
        CHECK(img.at(0, k) == bg);
        CHECK(img.at(63, k) == bg);
        CHECK(img.at(k, 0) == bg);
        CHECK(img.at(k, 63) == bg);
      }
    }
  }
}

TEST_CASE("side_px scales the geometry") {
  PhantomParams p = clean();
  p.side_px = 32;
  auto s = generate_stack(1, p, 1);
  CHECK(s.side_px() == 32);
  CHECK(layout_for(1, p, 1).fibula_rx == doctest::Approx(2.5));
}

TEST_CASE("invalid phantom params are configuration errors") {
  PhantomParams p;
  p.side_px = 15;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.noise_std = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.gap_growth_px_per_slice = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.base_gap_px = 25.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.gap_growth_px_per_slice = 3.0;
  CHECK_THROWS_AS(generate_stack(1, p, 0), ConfigError);
  CHECK_THROWS_AS(generate_stack(2, PhantomParams{}, 0), ConfigError);
  CHECK_NOTHROW(PhantomParams{}.validate());
}

TEST_CASE("default cohort has 144 scans and a 5+10 test split") {
  TempDir tmp;
  auto m = generate_cohort(48, 96, PhantomParams{}, 2024, tmp / "a");
  std::size_t dirs = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "a" / "scans")) dirs += e.is_directory() ? 1 : 0;
  CHECK(dirs == 144);
  CHECK(m.entries.size() == 144);
  CHECK(m.count(1, datapipe::Split::test) == 5);
  CHECK(m.count(0, datapipe::Split::test) == 10);
  auto disk = datapipe::read_manifest(tmp / "a" / "manifest.json");
  CHECK(disk.entries == m.entries);
  const auto& first = m.entries.front();
  auto stack = datapipe::read_stack(datapipe::resolve_entry_dir(tmp / "a" / "manifest.json", first));
  CHECK(stack.label == first.label);
  CHECK(stack.id == first.id);

  auto again = generate_cohort(48, 96, PhantomParams{}, 2024, tmp / "b");
  CHECK(again.entries == m.entries);
  CHECK(tree_bytes(tmp / "a") == tree_bytes(tmp / "b"));
}

TEST_CASE("one scan per class cannot be split and writes nothing") {
  TempDir tmp;
  CHECK_THROWS_AS(generate_cohort(1, 1, PhantomParams{}, 1, tmp / "tiny"), ConfigError);
  CHECK_FALSE(std::filesystem::exists(tmp / "tiny" / "manifest.json"));
  CHECK_FALSE(std::filesystem::exists(tmp / "tiny" / "scans"));
  CHECK_THROWS_AS(generate_cohort(0, 5, PhantomParams{}, 1, tmp / "none"), ConfigError);
}
