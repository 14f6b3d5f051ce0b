#pragma once

// On-disk feature bundle container, a language-neutral handoff to external
// training stacks. Little-endian throughout, written byte-by-byte so the
// layout is identical on every host:
//
//   offset  size  field
//   0       4     magic "MRFB"
//   4       4     u32 version (1)
//   8       4     u32 channels (3)
//   12      4     u32 height (224)
//   16      4     u32 width (224)
//   20      4     u32 side vector length (34)
//   24      1     u8 has_target (0 | 1)
//   25      1     u8 analytic_degenerate (0 | 1)
//   26      2     u16 reserved (0)
//   28      -     f32 overlay, channel-major then row-major
//           -     f32 side vector
//           -     f32 x 3 target (present iff has_target)

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorange/features.hpp"

namespace monorange::feature_container {

class ContainerError : public std::runtime_error {
 public:
  explicit ContainerError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr char kMagic[4] = {'M', 'R', 'F', 'B'};
inline constexpr std::uint32_t kVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const features::FeatureBundle& bundle) {
  std::vector<std::uint8_t> out;
  const std::size_t plane = static_cast<std::size_t>(features::kOverlaySize) * features::kOverlaySize;
  out.reserve(28 + 4 * (3 * plane + features::kSideVectorSize + 3));

  out.insert(out.end(), kMagic, kMagic + 4);
  detail::put_u32(out, kVersion);
  detail::put_u32(out, 3);
  detail::put_u32(out, features::kOverlaySize);
  detail::put_u32(out, features::kOverlaySize);
  detail::put_u32(out, features::kSideVectorSize);
  out.push_back(bundle.target.has_value() ? 1 : 0);
  out.push_back(bundle.side.analytic_degenerate ? 1 : 0);
  out.push_back(0);
  out.push_back(0);

  for (const auto& channel : bundle.overlay.channels) {
    if (channel.size() != plane) throw ContainerError("serialize: overlay channel size mismatch");
    for (const float f : channel) detail::put_f32(out, f);
  }
  for (const double v : bundle.side.values) detail::put_f32(out, static_cast<float>(v));
  if (bundle.target) {
    detail::put_f32(out, static_cast<float>(bundle.target->x));
    detail::put_f32(out, static_cast<float>(bundle.target->y));
    detail::put_f32(out, static_cast<float>(bundle.target->z));
  }
  return out;
}

inline features::FeatureBundle deserialize(const std::vector<std::uint8_t>& bytes) {
  const std::size_t plane = static_cast<std::size_t>(features::kOverlaySize) * features::kOverlaySize;
  if (bytes.size() < 28) throw ContainerError("deserialize: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ContainerError("deserialize: bad magic");
  if (detail::get_u32(&bytes[4]) != kVersion) throw ContainerError("deserialize: unknown version");
  const auto channels = detail::get_u32(&bytes[8]);
  const auto height = detail::get_u32(&bytes[12]);
  const auto width = detail::get_u32(&bytes[16]);
  const auto side_len = detail::get_u32(&bytes[20]);
  if (channels != 3 || height != features::kOverlaySize || width != features::kOverlaySize ||
      side_len != features::kSideVectorSize)
    throw ContainerError("deserialize: unexpected shape header");
  const bool has_target = bytes[24] != 0;

  const std::size_t expected = 28 + 4 * (3 * plane + side_len + (has_target ? 3u : 0u));
  if (bytes.size() != expected)
    throw ContainerError("deserialize: size mismatch (" + std::to_string(bytes.size()) +
                         " != " + std::to_string(expected) + ")");

  features::FeatureBundle bundle;
  bundle.side.analytic_degenerate = bytes[25] != 0;
  std::size_t off = 28;
  for (auto& channel : bundle.overlay.channels) {
    channel.resize(plane);
    for (auto& f : channel) {
      f = detail::get_f32(&bytes[off]);
      off += 4;
    }
  }
  for (auto& v : bundle.side.values) {
    v = detail::get_f32(&bytes[off]);
    off += 4;
  }
  if (has_target) {
    Vec3 t;
    t.x = detail::get_f32(&bytes[off]);
    t.y = detail::get_f32(&bytes[off + 4]);
    t.z = detail::get_f32(&bytes[off + 8]);
    bundle.target = t;
  }
  return bundle;
}

inline void write_file(const std::string& path, const features::FeatureBundle& bundle) {
  const auto bytes = serialize(bundle);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContainerError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ContainerError(path + ": write failed");
}

inline features::FeatureBundle read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError(path + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace monorange::feature_container
