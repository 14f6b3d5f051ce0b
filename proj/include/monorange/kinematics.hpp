#pragma once

// Forward scene model: polynomial 1-D trajectories for camera and object on
// the camera->object axis, an ideal projection H = K/d, and samplers that
// turn a scene into solver input. This is the ground-truth generator the
// estimator is tested against, so it is built from the displacement recursion
// d_n = d_{n-1} + dD_n - dC_n directly, never from the solver's algebra.

#include <array>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorange/geometry.hpp"
#include "monorange/rng.hpp"
#include "monorange/solver.hpp"

namespace monorange::kinematics {

class NonPositiveDistance : public std::runtime_error {
 public:
  explicit NonPositiveDistance(const std::string& what) : std::runtime_error(what) {}
};

class BadFrameSequence : public std::runtime_error {
 public:
  explicit BadFrameSequence(const std::string& what) : std::runtime_error(what) {}
};

/// Position along the camera->object axis as a polynomial of declared order.
/// Terms above the order are ignored at evaluation, so the position is
/// exactly polynomial of that order.
struct Trajectory1D {
  double initial_position = 0.0;  // metres at t = 0
  double velocity = 0.0;          // metres/second (order >= 1)
  double acceleration = 0.0;      // metres/second^2 (order == 2)
  int polynomial_order = 0;       // 0 stationary | 1 constant velocity | 2 constant acceleration

  double position(double t) const {
    double p = initial_position;
    if (polynomial_order >= 1) p += velocity * t;
    if (polynomial_order >= 2) p += 0.5 * acceleration * t * t;
    return p;
  }

  double velocity_at(double t) const {
    double v = 0.0;
    if (polynomial_order >= 1) v += velocity;
    if (polynomial_order >= 2) v += acceleration * t;
    return v;
  }
};

struct NoiseSpec {
  double height_noise_rel = 0.0;  // std of multiplicative Gaussian noise on H
  double imu_noise_abs = 0.0;     // metres, additive Gaussian noise on dC
  std::uint64_t seed = 0;
};

struct SceneSpec {
  Trajectory1D camera;
  Trajectory1D object;
  double size_constant = 1.0;  // K with H = K / d
  double frame_rate = 10.0;    // frames/second
  std::optional<NoiseSpec> noise;

  double distance(double t) const { return object.position(t) - camera.position(t); }
};

/// A sampled keyframe set plus the noiseless truth the estimator is judged
/// against. true_ranges[j] is the exact distance at keyframe j.
struct SceneSample {
  solver::KeyframeTriple triple;
  std::vector<double> true_ranges;

  double true_range() const { return true_ranges.back(); }
  double distance_change() const { return true_ranges.back() - true_ranges.front(); }
  /// Last-interval closing rate minus first-interval closing rate.
  double velocity_change() const {
    const std::size_t q = true_ranges.size() - 1;
    const double dt = triple.dt;
    return ((true_ranges[q] - true_ranges[q - 1]) - (true_ranges[1] - true_ranges[0])) / dt;
  }
};

namespace detail {

inline void apply_noise(solver::KeyframeTriple& triple, const NoiseSpec& noise) {
  Rng rng(noise.seed);
  // Draw order is part of the determinism contract: heights first, then deltas.
  for (double& h : triple.heights) {
    const double g = rng.normal();
    if (noise.height_noise_rel > 0.0)
      h *= std::max(1e-12, 1.0 + noise.height_noise_rel * g);
  }
  for (double& dc : triple.camera_deltas) {
    const double g = rng.normal();
    if (noise.imu_noise_abs > 0.0) dc += noise.imu_noise_abs * g;
  }
}

}  // namespace detail

/// Samples projected heights and camera displacements at the given frames.
/// Frames must be strictly increasing and uniformly spaced (the triple
/// carries a single dt and the estimator assumes uniform intervals).
inline SceneSample sample_scene(const SceneSpec& spec, std::span<const int> frame_indices) {
  if (!(spec.size_constant > 0.0))
    throw std::invalid_argument("sample_scene: size_constant must be positive");
  if (!(spec.frame_rate > 0.0))
    throw std::invalid_argument("sample_scene: frame_rate must be positive");
  if (frame_indices.size() < 2)
    throw BadFrameSequence("sample_scene: need at least two frames, got " +
                           std::to_string(frame_indices.size()));
  const int step = frame_indices[1] - frame_indices[0];
  for (std::size_t j = 1; j < frame_indices.size(); ++j) {
    const int gap = frame_indices[j] - frame_indices[j - 1];
    if (gap <= 0)
      throw BadFrameSequence("sample_scene: frame indices must be strictly increasing");
    if (gap != step)
      throw BadFrameSequence("sample_scene: frame indices must be uniformly spaced");
  }

  SceneSample out;
  auto& triple = out.triple;
  triple.dt = static_cast<double>(step) / spec.frame_rate;
  triple.frame_ids.assign(frame_indices.begin(), frame_indices.end());

  std::vector<double> cam_positions;
  for (const int f : frame_indices) {
    const double t = static_cast<double>(f) / spec.frame_rate;
    const double d = spec.distance(t);
    if (!(d > 0.0))
      throw NonPositiveDistance("sample_scene: distance " + std::to_string(d) + " at frame " +
                                std::to_string(f) + " is not positive");
    out.true_ranges.push_back(d);
    triple.heights.push_back(spec.size_constant / d);
    triple.bbox_centers.push_back({0.5, 0.5});
    cam_positions.push_back(spec.camera.position(t));
  }
  for (std::size_t j = 1; j < cam_positions.size(); ++j)
    triple.camera_deltas.push_back(cam_positions[j] - cam_positions[j - 1]);

  if (spec.noise) detail::apply_noise(triple, *spec.noise);
  return out;
}

/// Recursion-form sampler: distances evolve from explicit per-interval object
/// and camera displacements, d_n = d_{n-1} + dD_n - dC_n. This covers motion
/// that no low-order polynomial trajectory pair can produce (e.g. arbitrary
/// camera acceleration profiles) and is the reference path for solver tests.
inline SceneSample sample_deltas(double initial_range, std::span<const double> object_deltas,
                                 std::span<const double> camera_deltas, double size_constant,
                                 double dt, const std::optional<NoiseSpec>& noise = std::nullopt) {
  if (!(size_constant > 0.0))
    throw std::invalid_argument("sample_deltas: size_constant must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("sample_deltas: dt must be positive");
  if (object_deltas.size() != camera_deltas.size() || object_deltas.empty())
    throw BadFrameSequence("sample_deltas: need equal, nonzero delta counts");

  SceneSample out;
  auto& triple = out.triple;
  triple.dt = dt;

  double d = initial_range;
  if (!(d > 0.0)) throw NonPositiveDistance("sample_deltas: initial range must be positive");
  out.true_ranges.push_back(d);
  for (std::size_t n = 0; n < object_deltas.size(); ++n) {
    d = d + object_deltas[n] - camera_deltas[n];
    if (!(d > 0.0))
      throw NonPositiveDistance("sample_deltas: distance became non-positive at interval " +
                                std::to_string(n + 1));
    out.true_ranges.push_back(d);
  }
  for (std::size_t j = 0; j < out.true_ranges.size(); ++j) {
    triple.heights.push_back(size_constant / out.true_ranges[j]);
    triple.bbox_centers.push_back({0.5, 0.5});
    triple.frame_ids.push_back(static_cast<int>(j));
  }
  triple.camera_deltas.assign(camera_deltas.begin(), camera_deltas.end());

  if (noise) detail::apply_noise(triple, *noise);
  return out;
}

/// Pinhole geometry used only by the simulator and this adapter; the
/// estimator itself never sees intrinsics.
struct PinholeCamera {
  double focal_px = 700.0;
  double principal_x_px = 621.0;
  double principal_y_px = 187.5;
  double image_width_px = 1242.0;
  double image_height_px = 375.0;
};

/// Lifts a range to a Cartesian position along the ray through a pixel:
/// phi = range * unit(( (px - cx)/f, (py - cy)/f, 1 )). ||phi|| equals range
/// by construction.
inline Vec3 ray_adapter_px(double center_x_px, double center_y_px, double focal_px,
                           double principal_x_px, double principal_y_px, double range) {
  if (!(range > 0.0)) throw std::invalid_argument("ray_adapter: range must be positive");
  if (!(focal_px > 0.0)) throw std::invalid_argument("ray_adapter: focal length must be positive");
  Vec3 dir{(center_x_px - principal_x_px) / focal_px, (center_y_px - principal_y_px) / focal_px,
           1.0};
  return (range / dir.norm()) * dir;
}

/// Same, from a BBox center in normalized image coordinates.
inline Vec3 ray_adapter(const std::array<double, 2>& center_uv, const PinholeCamera& cam,
                        double range) {
  return ray_adapter_px(center_uv[0] * cam.image_width_px, center_uv[1] * cam.image_height_px,
                        cam.focal_px, cam.principal_x_px, cam.principal_y_px, range);
}

// ---------------------------------------------------------------------------
// Scene config format: UTF-8 "key = value" lines, '#' comments, unknown keys
// rejected. Keys:
//   camera.initial_position  camera.velocity  camera.acceleration  camera.order
//   object.initial_position  object.velocity  object.acceleration  object.order
//   size_constant  frame_rate
//   noise.height_rel  noise.imu_abs  noise.seed      (optional block)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& value, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("scene config line " + std::to_string(line) + ": key '" + key +
                             "' has non-numeric value '" + value + "'");
  }
}

}  // namespace detail

inline SceneSpec load_scene(std::istream& in) {
  SceneSpec spec;
  std::map<std::string, bool> noise_keys_seen;
  NoiseSpec noise;
  bool has_noise = false;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("scene config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    const auto num = [&] { return detail::parse_double(value, key, lineno); };

    if (key == "camera.initial_position") spec.camera.initial_position = num();
    else if (key == "camera.velocity") spec.camera.velocity = num();
    else if (key == "camera.acceleration") spec.camera.acceleration = num();
    else if (key == "camera.order") spec.camera.polynomial_order = static_cast<int>(num());
    else if (key == "object.initial_position") spec.object.initial_position = num();
    else if (key == "object.velocity") spec.object.velocity = num();
    else if (key == "object.acceleration") spec.object.acceleration = num();
    else if (key == "object.order") spec.object.polynomial_order = static_cast<int>(num());
    else if (key == "size_constant") spec.size_constant = num();
    else if (key == "frame_rate") spec.frame_rate = num();
    else if (key == "noise.height_rel") { noise.height_noise_rel = num(); has_noise = true; }
    else if (key == "noise.imu_abs") { noise.imu_noise_abs = num(); has_noise = true; }
    else if (key == "noise.seed") { noise.seed = static_cast<std::uint64_t>(num()); has_noise = true; }
    else
      throw std::runtime_error("scene config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  if (has_noise) spec.noise = noise;
  for (const auto* traj : {&spec.camera, &spec.object}) {
    if (traj->polynomial_order < 0 || traj->polynomial_order > 2)
      throw std::runtime_error("scene config: trajectory order must be 0, 1 or 2");
  }
  if (!(spec.size_constant > 0.0)) throw std::runtime_error("scene config: size_constant must be positive");
  if (!(spec.frame_rate > 0.0)) throw std::runtime_error("scene config: frame_rate must be positive");
  return spec;
}

inline void save_scene(std::ostream& out, const SceneSpec& spec) {
  const auto put = [&out](const char* key, double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    out << key << " = " << ss.str() << "\n";
  };
  put("camera.initial_position", spec.camera.initial_position);
  put("camera.velocity", spec.camera.velocity);
  put("camera.acceleration", spec.camera.acceleration);
  out << "camera.order = " << spec.camera.polynomial_order << "\n";
  put("object.initial_position", spec.object.initial_position);
  put("object.velocity", spec.object.velocity);
  put("object.acceleration", spec.object.acceleration);
  out << "object.order = " << spec.object.polynomial_order << "\n";
  put("size_constant", spec.size_constant);
  put("frame_rate", spec.frame_rate);
  if (spec.noise) {
    put("noise.height_rel", spec.noise->height_noise_rel);
    put("noise.imu_abs", spec.noise->imu_noise_abs);
    out << "noise.seed = " << spec.noise->seed << "\n";
  }
}

}  // namespace monorange::kinematics
