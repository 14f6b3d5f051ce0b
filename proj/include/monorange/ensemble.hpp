#pragma once

// Randomized scene ensembles for synthetic experiments. Draws scenes whose
// noiseless geometry is solvable at the requested motion order (rejection on
// the condition number), then applies observation noise per scene.
//
// Orders 0 and 1 use polynomial trajectories. Order 2 drives the camera with
// i.i.d. per-interval displacements through the recursion sampler: an object
// under constant acceleration observed by a camera whose position is itself a
// polynomial of order <= 2 is unobservable (the scaled solution stays inside
// the constant-acceleration family), so a solvable order-2 scene needs a
// camera displacement sequence outside that family.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "monorange/kinematics.hpp"
#include "monorange/rng.hpp"
#include "monorange/solver.hpp"

namespace monorange::ensemble {

struct EnsembleParams {
  int motion_order = 1;
  double dist_min = 5.0;             // initial range, metres
  double dist_max = 80.0;
  double camera_speed_min = 1.0;     // |v_cam| m/s
  double camera_speed_max = 5.0;
  double camera_accel_min = 1.5;     // |a_cam| m/s^2; nonzero keeps order 1 observable
  double camera_accel_max = 2.5;
  double object_speed_max = 2.0;     // |v_obj| m/s
  double object_accel_max = 1.0;     // |a_obj| m/s^2 (order 2)
  double camera_delta_max = 2.0;     // i.i.d. |dC| per interval, metres (order 2)
  double size_constant = 1.0;
  double frame_rate = 10.0;
  int stride = 5;                    // frames per keyframe interval
  double height_noise_rel = 0.0;
  double imu_noise_abs = 0.0;
  double max_condition = 1e6;        // rejection threshold on the noiseless system
  int max_retries = 1000;
  double eps_singular = solver::kDefaultEpsSingular;
};

namespace detail {

inline std::vector<int> keyframes(int stride, int count) {
  std::vector<int> f;
  for (int i = 0; i < count; ++i) f.push_back(i * stride);
  return f;
}

inline bool solvable(const kinematics::SceneSample& noiseless, const EnsembleParams& p) {
  const auto est = solver::estimate_range(noiseless.triple, p.motion_order, p.eps_singular);
  return est.ok() && est.condition_number <= p.max_condition;
}

}  // namespace detail

/// Draws one scene whose noiseless system is comfortably non-singular, then
/// returns the noisy sample (true_ranges stay noiseless). Throws after
/// max_retries rejections, which indicates inconsistent parameters.
inline kinematics::SceneSample generate_scene(const EnsembleParams& p, Rng& rng) {
  if (p.motion_order < 0 || p.motion_order > 2)
    throw std::invalid_argument("generate_scene: motion order must be 0, 1 or 2");
  const int q = p.motion_order + 1;
  const double dt = static_cast<double>(p.stride) / p.frame_rate;

  for (int attempt = 0; attempt < p.max_retries; ++attempt) {
    const std::uint64_t noise_seed = rng.bits();

    if (p.motion_order <= 1) {
      kinematics::SceneSpec spec;
      spec.size_constant = p.size_constant;
      spec.frame_rate = p.frame_rate;
      spec.object.initial_position = rng.uniform(p.dist_min, p.dist_max);
      spec.object.polynomial_order = p.motion_order;
      if (p.motion_order == 1) spec.object.velocity = rng.uniform_signed(0.0, p.object_speed_max);
      spec.camera.initial_position = 0.0;
      spec.camera.polynomial_order = 2;
      // Bias the camera toward the object so approach-dominated geometry,
      // the common driving case, is well represented.
      spec.camera.velocity = (rng.uniform01() < 0.75 ? 1.0 : -1.0) *
                             rng.uniform(p.camera_speed_min, p.camera_speed_max);
      spec.camera.acceleration = rng.uniform_signed(p.camera_accel_min, p.camera_accel_max);

      const auto frames = detail::keyframes(p.stride, q + 1);
      kinematics::SceneSample noiseless;
      try {
        noiseless = kinematics::sample_scene(spec, frames);
      } catch (const kinematics::NonPositiveDistance&) {
        continue;  // camera overran the object inside the window
      }
      if (!detail::solvable(noiseless, p)) continue;
      if (p.height_noise_rel == 0.0 && p.imu_noise_abs == 0.0) return noiseless;
      spec.noise = kinematics::NoiseSpec{p.height_noise_rel, p.imu_noise_abs, noise_seed};
      auto noisy = kinematics::sample_scene(spec, frames);
      noisy.true_ranges = noiseless.true_ranges;
      return noisy;
    }

    // Order 2: constant-acceleration object, free-form camera deltas.
    const double d0 = rng.uniform(p.dist_min, p.dist_max);
    const double v_obj = rng.uniform_signed(0.0, p.object_speed_max);
    const double a_obj = rng.uniform_signed(0.0, p.object_accel_max);
    std::vector<double> object_deltas, camera_deltas;
    for (int n = 1; n <= q; ++n) {
      object_deltas.push_back(v_obj * dt + 0.5 * a_obj * dt * dt * (2 * n - 1));
      camera_deltas.push_back(rng.uniform_signed(0.0, p.camera_delta_max));
    }
    kinematics::SceneSample noiseless;
    try {
      noiseless = kinematics::sample_deltas(d0, object_deltas, camera_deltas, p.size_constant, dt);
    } catch (const kinematics::NonPositiveDistance&) {
      continue;
    }
    if (!detail::solvable(noiseless, p)) continue;
    if (p.height_noise_rel == 0.0 && p.imu_noise_abs == 0.0) return noiseless;
    const kinematics::NoiseSpec noise{p.height_noise_rel, p.imu_noise_abs, noise_seed};
    auto noisy = kinematics::sample_deltas(d0, object_deltas, camera_deltas, p.size_constant, dt,
                                           noise);
    noisy.true_ranges = noiseless.true_ranges;
    return noisy;
  }
  throw std::runtime_error("generate_scene: exhausted retries; ensemble parameters admit no "
                           "solvable geometry");
}

/// Constant-relative-velocity scenes: object stationary or constant velocity,
/// camera constant velocity. The q = 2 estimator is structurally blind here.
inline kinematics::SceneSample generate_degenerate_scene(const EnsembleParams& p, Rng& rng) {
  kinematics::SceneSpec spec;
  spec.size_constant = p.size_constant;
  spec.frame_rate = p.frame_rate;
  spec.object.initial_position = rng.uniform(p.dist_min, p.dist_max);
  spec.object.polynomial_order = 1;
  spec.object.velocity = rng.uniform_signed(0.0, p.object_speed_max);
  spec.camera.polynomial_order = 1;
  spec.camera.velocity = rng.uniform(p.camera_speed_min, p.camera_speed_max);
  const std::uint64_t noise_seed = rng.bits();

  const auto frames = detail::keyframes(p.stride, 3);
  for (int attempt = 0; attempt < p.max_retries; ++attempt) {
    try {
      auto noiseless = kinematics::sample_scene(spec, frames);
      if (p.height_noise_rel == 0.0 && p.imu_noise_abs == 0.0) return noiseless;
      auto noisy_spec = spec;
      noisy_spec.noise = kinematics::NoiseSpec{p.height_noise_rel, p.imu_noise_abs, noise_seed};
      auto noisy = kinematics::sample_scene(noisy_spec, frames);
      noisy.true_ranges = noiseless.true_ranges;
      return noisy;
    } catch (const kinematics::NonPositiveDistance&) {
      spec.object.initial_position = rng.uniform(p.dist_min, p.dist_max);
      spec.camera.velocity = rng.uniform(p.camera_speed_min, p.camera_speed_max);
    }
  }
  throw std::runtime_error("generate_degenerate_scene: exhausted retries");
}

}  // namespace monorange::ensemble
