#include "vsdl/netblocks/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace vsdl::netblocks {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw TruncatedFileError("weight file truncated while reading " + std::string(what) + " at byte " +
                               std::to_string(pos_));
    }
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8(const char* what) { return *take(1, what); }
  std::uint16_t u16(const char* what) {
    const auto* p = take(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    const auto* p = take(4, what);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(const Network& net) {
  std::vector<std::uint8_t> out(std::begin(kWeightMagic), std::end(kWeightMagic));
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(net.parameters().size()));
  for (const auto& p : net.parameters()) {
    if (p.name.size() > 0xffff) throw IoError("parameter name too long: " + p.name);
    put_u16(out, static_cast<std::uint16_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    const auto& shape = p.tensor.shape();
    out.push_back(static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Network decode_weights(const ModelSpec& spec, const std::vector<std::uint8_t>& bytes) {
  Network net = build(spec, 0);
  Reader in(bytes);
  const auto* magic = in.take(4, "magic");
  if (std::memcmp(magic, kWeightMagic, 4) != 0) throw BadMagicError("not a VSDL weight file (bad magic)");
  const auto version = in.u32("version");
  if (version != kWeightFormatVersion) {
    throw VersionMismatchError("weight file version " + std::to_string(version) + ", expected " +
                               std::to_string(kWeightFormatVersion));
  }
  const auto count = in.u32("tensor count");

  std::map<std::string, bool> seen;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = in.u16("name length");
    const auto* name_bytes = in.take(name_len, "tensor name");
    const std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    const auto rank = in.u8("rank");
    autodiff::Shape shape(rank);
    for (auto& d : shape) d = in.u32("dimension");

    Tensor* target = nullptr;
    for (auto& p : net.parameters()) {
      if (p.name == name) target = &p.tensor;
    }
    if (target == nullptr) throw WeightMismatchError("weight file tensor '" + name + "' is not part of the model spec");
    if (seen[name]) throw WeightMismatchError("weight file repeats tensor '" + name + "'");
    seen[name] = true;
    if (target->shape() != shape) {
      throw WeightMismatchError("shape mismatch for '" + name + "': file " + autodiff::to_string(shape) + ", spec " +
                                autodiff::to_string(target->shape()));
    }
    auto dst = target->mutable_data();
    for (auto& v : dst) v = std::bit_cast<float>(in.u32("tensor values"));
  }
  for (const auto& p : net.parameters()) {
    if (!seen[p.name]) throw WeightMismatchError("weight file is missing tensor '" + p.name + "'");
  }
  if (in.remaining() != 0) {
    throw TrailingBytesError(std::to_string(in.remaining()) + " trailing bytes after the last tensor");
  }
  return net;
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  const auto bytes = encode_weights(net);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weights to " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing weights to " + path.string());
}

Network load_weights(const ModelSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weights " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(spec, bytes);
}

}  // namespace vsdl::netblocks
