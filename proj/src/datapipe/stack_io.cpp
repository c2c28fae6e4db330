#include "vsdl/datapipe/stack_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "vsdl/datapipe/preprocess.hpp"
#include "vsdl/error.hpp"

namespace vsdl::datapipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in, const fs::path& path) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  if (token.empty()) throw InputError("truncated PGM header in " + path.string());
  return token;
}

std::size_t parse_positive(const std::string& token, const fs::path& path) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(token, &pos);
    if (pos == token.size() && v > 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw InputError("bad PGM header value '" + token + "' in " + path.string());
}

}  // namespace

RawImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image " + path.string());
  if (next_token(in, path) != "P5") throw InputError("not a binary PGM (P5): " + path.string());
  RawImage img;
  img.width = parse_positive(next_token(in, path), path);
  img.height = parse_positive(next_token(in, path), path);
  const std::size_t maxval = parse_positive(next_token(in, path), path);
  if (maxval != 255) throw InputError("PGM maxval must be 255, got " + std::to_string(maxval) + " in " + path.string());
  std::vector<unsigned char> bytes(img.width * img.height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw InputError("truncated PGM pixel data in " + path.string());
  }
  img.values.assign(bytes.begin(), bytes.end());
  return img;
}

void write_pgm(const fs::path& path, const RawImage& image) {
  if (image.values.size() != image.width * image.height) throw InputError("write_pgm: malformed image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int v = image.values[i];
    if (v < 0 || v > 255) throw InputError("write_pgm: value out of range in " + path.string());
    bytes[i] = static_cast<unsigned char>(v);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::string slice_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slice_%03zu.pgm", index);
  return buf;
}

void write_stack(const fs::path& dir, const SliceStack& stack) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t k = 0; k < stack.slices.size(); ++k) {
    write_pgm(dir / slice_file_name(k), denormalize(stack.slices[k]));
  }
  json meta = {{"id", stack.id}, {"spacing_mm", stack.spacing_mm}, {"plafond_index", stack.plafond_index}};
  if (stack.label) meta["label"] = *stack.label;
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

SliceStack read_stack(const fs::path& dir, std::size_t expected_slices) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw InputError("missing stack metadata " + meta_path.string());
  SliceStack stack;
  try {
    const json meta = json::parse(meta_in);
    stack.id = meta.at("id").get<std::string>();
    stack.spacing_mm = meta.at("spacing_mm").get<double>();
    stack.plafond_index = meta.value("plafond_index", 0);
    if (meta.contains("label") && !meta["label"].is_null()) {
      const int label = meta["label"].get<int>();
      if (label != 0 && label != 1) throw InputError("label must be 0 or 1 in " + meta_path.string());
      stack.label = label;
    }
  } catch (const json::exception& e) {
    throw InputError("malformed " + meta_path.string() + ": " + e.what());
  }
  stack.slices.reserve(expected_slices);
  for (std::size_t k = 0; k < expected_slices; ++k) {
    const fs::path p = dir / slice_file_name(k);
    if (!fs::exists(p)) throw InputError("missing slice file " + p.string());
    stack.slices.push_back(normalize(read_pgm(p)));
    const auto& s = stack.slices.back();
    if (s.height != stack.slices.front().height || s.width != stack.slices.front().width) {
      throw InputError("slice dimensions differ within stack at " + p.string());
    }
  }
  return stack;
}

std::vector<Image> read_volume(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("volume directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .pgm slices in " + dir.string());
  std::vector<Image> volume;
  volume.reserve(files.size());
  for (const auto& f : files) volume.push_back(normalize(read_pgm(f)));
  return volume;
}

}  // namespace vsdl::datapipe
