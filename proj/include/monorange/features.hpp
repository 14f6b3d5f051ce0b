#pragma once

// Network-input assembly: the 3 x 224 x 224 center-overlay of one track's
// keyframe crops, the 34-value side vector, and the reverse-Huber training
// losses with analytic derivatives.
//
// Overlay rule: one common scale 224 / max(bbox heights) is applied to all
// three grayscale crops (bilinear, aspect preserved, round-half-up dims,
// min 1 px), then each is center-padded with zeros or center-cropped to
// 224 x 224 and stacked in channel order oldest..newest.
//
// Side vector layout (34): [0..26] camera state block (see ingest),
// [27..32] BBox centers (u, v) per keyframe normalized by image width/height,
// [33] the analytic range, or -1 with the degenerate flag set when geometry
// made the closed form unusable. Ranges are strictly positive, so -1 is
// unambiguous.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "monorange/geometry.hpp"
#include "monorange/ingest.hpp"
#include "monorange/solver.hpp"

namespace monorange::features {

class DegeneratePatch : public std::runtime_error {
 public:
  explicit DegeneratePatch(const std::string& what) : std::runtime_error(what) {}
};

class NonPositiveC : public std::runtime_error {
 public:
  explicit NonPositiveC(const std::string& what) : std::runtime_error(what) {}
};

class EmptyBatch : public std::runtime_error {
 public:
  explicit EmptyBatch(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kOverlaySize = 224;
inline constexpr int kSideVectorSize = 34;
inline constexpr double kDegenerateSentinel = -1.0;

/// Single-channel luminance patch, row-major, values in [0, 1].
struct GrayPatch {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return width <= 0 || height <= 0; }
};

/// Luma conversion with the classic 0.299 / 0.587 / 0.114 weights. `rgb` is
/// interleaved 8-bit, row-major.
inline GrayPatch grayscale_from_rgb(int width, int height, std::span<const unsigned char> rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("grayscale_from_rgb: dimension/buffer mismatch");
  GrayPatch out;
  out.width = width;
  out.height = height;
  out.pixels.resize(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
    out.pixels[i] = (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
  }
  return out;
}

/// Integer-pixel crop covering the (possibly fractional) box: floor on the
/// near edges, ceil on the far edges, clamped to the frame.
inline GrayPatch crop(const GrayPatch& frame, const Box2D& bbox) {
  const int x0 = std::max(0, static_cast<int>(std::floor(bbox.left)));
  const int y0 = std::max(0, static_cast<int>(std::floor(bbox.top)));
  const int x1 = std::min(frame.width, static_cast<int>(std::ceil(bbox.right)));
  const int y1 = std::min(frame.height, static_cast<int>(std::ceil(bbox.bottom)));
  if (x1 <= x0 || y1 <= y0)
    throw DegeneratePatch("crop: box does not cover any pixels");
  GrayPatch out;
  out.width = x1 - x0;
  out.height = y1 - y0;
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) out.at(x - x0, y - y0) = frame.at(x, y);
  return out;
}

/// Bilinear resample with the half-pixel-center coordinate convention.
inline GrayPatch resize_bilinear(const GrayPatch& src, int out_w, int out_h) {
  if (src.empty()) throw DegeneratePatch("resize_bilinear: empty source");
  if (out_w <= 0 || out_h <= 0)
    throw std::invalid_argument("resize_bilinear: output dims must be positive");
  GrayPatch out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(static_cast<std::size_t>(out_w) * out_h);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * src.at(x0, y0) + wx * src.at(x1, y0);
      const double bot = (1.0 - wx) * src.at(x0, y1) + wx * src.at(x1, y1);
      out.at(x, y) = (1.0 - wy) * top + wy * bot;
    }
  }
  return out;
}

struct OverlayTensor {
  // channel-major, each channel kOverlaySize x kOverlaySize row-major
  std::array<std::vector<float>, 3> channels;

  float at(int c, int y, int x) const {
    return channels[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * kOverlaySize + x];
  }
};

namespace detail {

inline int scaled_dim(double v) {  // round half up, at least one pixel
  return std::max(1, static_cast<int>(std::floor(v + 0.5)));
}

/// Center-place `src` into a kOverlaySize square: pad with zeros where
/// smaller, crop symmetrically where larger (extra pixel goes right/bottom).
inline std::vector<float> center_fit(const GrayPatch& src) {
  std::vector<float> out(static_cast<std::size_t>(kOverlaySize) * kOverlaySize, 0.0f);
  const int copy_w = std::min(src.width, kOverlaySize);
  const int copy_h = std::min(src.height, kOverlaySize);
  const int src_x = (src.width - copy_w) / 2;
  const int src_y = (src.height - copy_h) / 2;
  const int dst_x = (kOverlaySize - copy_w) / 2;
  const int dst_y = (kOverlaySize - copy_h) / 2;
  for (int y = 0; y < copy_h; ++y)
    for (int x = 0; x < copy_w; ++x)
      out[static_cast<std::size_t>(dst_y + y) * kOverlaySize + (dst_x + x)] =
          static_cast<float>(src.at(src_x + x, src_y + y));
  return out;
}

}  // namespace detail

/// Builds the 3-channel overlay from the keyframe crops (oldest first) and
/// their BBox heights in pixels.
inline OverlayTensor make_overlay(const std::array<GrayPatch, 3>& patches,
                                  const std::array<double, 3>& bbox_heights) {
  double max_h = 0.0;
  for (const double h : bbox_heights) max_h = std::max(max_h, h);
  if (!(max_h > 0.0)) throw DegeneratePatch("make_overlay: heights must be positive");
  for (const auto& p : patches)
    if (p.empty()) throw DegeneratePatch("make_overlay: empty patch");

  const double scale = static_cast<double>(kOverlaySize) / max_h;
  OverlayTensor out;
  for (std::size_t i = 0; i < 3; ++i) {
    const GrayPatch resized = resize_bilinear(patches[i], detail::scaled_dim(patches[i].width * scale),
                                              detail::scaled_dim(patches[i].height * scale));
    out.channels[i] = detail::center_fit(resized);
  }
  return out;
}

struct SideVector {
  std::array<double, kSideVectorSize> values{};
  bool analytic_degenerate = false;
};

inline SideVector make_side_vector(const ingest::ImuFeatures& imu,
                                   const std::array<std::array<double, 2>, 3>& centers,
                                   const solver::DistanceEstimate& analytic) {
  SideVector out;
  std::size_t k = 0;
  for (const double v : imu.values) out.values[k++] = v;
  for (const auto& c : centers) {
    out.values[k++] = c[0];
    out.values[k++] = c[1];
  }
  if (analytic.ok()) {
    out.values[k] = analytic.range;
  } else {
    out.values[k] = kDegenerateSentinel;
    out.analytic_degenerate = true;
  }
  return out;
}

struct FeatureBundle {
  OverlayTensor overlay;
  SideVector side;
  std::optional<Vec3> target;  // ground-truth Cartesian position (training export)
};

// --- losses ---------------------------------------------------------------

struct BerHuResult {
  double value = 0.0;
  double derivative = 0.0;  // d value / d residual
};

/// Reverse Huber: |r| up to c, (r^2 + c^2) / (2c) beyond. Continuous and
/// differentiable at |r| = c.
inline BerHuResult berhu(double residual, double c) {
  if (!(c > 0.0)) throw NonPositiveC("berhu: threshold c must be positive");
  const double a = std::abs(residual);
  if (a <= c) return {a, residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0)};
  return {(residual * residual + c * c) / (2.0 * c), residual / c};
}

struct DataLossResult {
  double loss = 0.0;
  std::vector<Vec3> gradients;  // d loss / d phi_i, c treated as a batch constant
  double c = 0.0;
};

/// Batch loss: mean reverse-Huber over all Cartesian components, with
/// c = 0.2 * max componentwise |residual| over the batch. An all-perfect
/// batch (c = 0) yields loss 0 by convention. The reported gradients freeze
/// c at its batch value.
inline DataLossResult data_loss(std::span<const std::pair<Vec3, Vec3>> batch) {
  if (batch.empty()) throw EmptyBatch("data_loss: empty batch");
  double max_abs = 0.0;
  for (const auto& [phi, phi_star] : batch) {
    const Vec3 r = phi - phi_star;
    max_abs = std::max({max_abs, std::abs(r.x), std::abs(r.y), std::abs(r.z)});
  }
  DataLossResult out;
  out.c = 0.2 * max_abs;
  out.gradients.assign(batch.size(), Vec3{});
  if (out.c == 0.0) return out;

  const double scale = 1.0 / (3.0 * static_cast<double>(batch.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vec3 r = batch[i].first - batch[i].second;
    const auto bx = berhu(r.x, out.c), by = berhu(r.y, out.c), bz = berhu(r.z, out.c);
    sum += bx.value + by.value + bz.value;
    out.gradients[i] = {scale * bx.derivative, scale * by.derivative, scale * bz.derivative};
  }
  out.loss = scale * sum;
  return out;
}

}  // namespace monorange::features
