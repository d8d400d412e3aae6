#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "camo/core/error.hpp"
#include "camo/victim/detector.hpp"

namespace camo {

inline constexpr char kWeightMagic[4] = {'C', 'F', 'W', '1'};
inline constexpr std::uint32_t kWeightVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& b, std::size_t end, std::string source)
      : b_(b), end_(end), source_(std::move(source)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > end_) throw IoError(source_ + ": weight file truncated");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 4;
  std::size_t end_;
  std::string source_;
};

inline std::uint32_t crc32_of(const std::uint8_t* p, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

}  // namespace detail

/// Binary layout: "CFW1", descriptor block, float32 tensors in layer order
/// (weight then bias), CRC32 of everything before it. All little-endian.
inline std::vector<std::uint8_t> serialize(const DetectorWeights& w) {
  validate(w);
  const DetectorDescriptor& d = w.descriptor;
  detail::ByteWriter out;
  out.raw(kWeightMagic, 4);
  out.u32(kWeightVersion);
  out.u32(static_cast<std::uint32_t>(d.input_size));
  out.u32(static_cast<std::uint32_t>(d.num_classes));
  out.u32(static_cast<std::uint32_t>(d.activation));
  out.f32(static_cast<float>(d.anchor));
  out.u32(static_cast<std::uint32_t>(d.channels.size()));
  for (int c : d.channels) out.u32(static_cast<std::uint32_t>(c));
  out.u32(static_cast<std::uint32_t>(d.context.size()));
  for (int c : d.context) out.u32(static_cast<std::uint32_t>(c));
  out.u32(static_cast<std::uint32_t>(w.layers.size()));
  for (const ConvLayer& l : w.layers) {
    out.u32(static_cast<std::uint32_t>(l.out_channels));
    out.u32(static_cast<std::uint32_t>(l.in_channels));
    out.u32(static_cast<std::uint32_t>(l.kernel));
    out.u32(static_cast<std::uint32_t>(l.stride));
  }
  for (const ConvLayer& l : w.layers) {
    for (float v : l.weight) out.f32(v);
    for (float v : l.bias) out.f32(v);
  }
  out.u32(detail::crc32_of(out.bytes.data(), out.bytes.size()));
  return std::move(out.bytes);
}

inline DetectorWeights deserialize(const std::vector<std::uint8_t>& bytes, const std::string& source = "<weights>") {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
    throw IoError(source + ": not a detector weight file (bad magic)");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (stored != detail::crc32_of(bytes.data(), body)) throw IoError(source + ": checksum mismatch");

  detail::ByteReader in(bytes, body, source);
  if (const auto v = in.u32(); v != kWeightVersion) throw IoError(source + ": unsupported version " + std::to_string(v));
  DetectorDescriptor d;
  d.input_size = static_cast<int>(in.u32());
  d.num_classes = static_cast<int>(in.u32());
  const auto act = in.u32();
  if (act > 2) throw IoError(source + ": unknown activation id " + std::to_string(act));
  d.activation = static_cast<Activation>(act);
  d.anchor = in.f32();
  d.channels.resize(in.u32());
  if (d.channels.size() > 64) throw IoError(source + ": implausible block count");
  for (int& c : d.channels) c = static_cast<int>(in.u32());
  d.context.resize(in.u32());
  if (d.context.size() > 64) throw IoError(source + ": implausible context block count");
  for (int& c : d.context) c = static_cast<int>(in.u32());
  try {
    validate(d);
  } catch (const Error& e) {
    throw IoError(source + ": " + e.what());
  }
  DetectorWeights w = make_weights(d);
  if (in.u32() != w.layers.size()) throw IoError(source + ": layer count does not match the descriptor");
  for (const ConvLayer& l : w.layers) {
    const std::uint32_t shape[4] = {in.u32(), in.u32(), in.u32(), in.u32()};
    if (shape[0] != static_cast<std::uint32_t>(l.out_channels) || shape[1] != static_cast<std::uint32_t>(l.in_channels) ||
        shape[2] != static_cast<std::uint32_t>(l.kernel) || shape[3] != static_cast<std::uint32_t>(l.stride)) {
      throw IoError(source + ": tensor shape does not match the descriptor");
    }
  }
  for (ConvLayer& l : w.layers) {
    for (float& v : l.weight) v = in.f32();
    for (float& v : l.bias) v = in.f32();
  }
  if (!in.done()) throw IoError(source + ": trailing bytes before checksum");
  return w;
}

inline void save_weights(const DetectorWeights& w, const std::filesystem::path& path) {
  const auto bytes = serialize(w);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

inline DetectorWeights load_weights(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes, path.string());
}

}  // namespace camo
