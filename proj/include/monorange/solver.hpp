#pragma once

// Differential range estimation from projected-size ratios and camera
// ego-motion.
//
// Model: positions live on the camera->object axis. With the pinhole
// proportionality H = K/d, consecutive size ratios p_n = H_n/H_{n-1} equal
// inverse distance ratios d_{n-1}/d_n. Per keyframe interval the range obeys
// the recursion d_n = d_{n-1} + dD_n - dC_n (object displacement minus camera
// displacement; camera motion toward the object is positive). Writing the
// object's per-interval displacement as a low-order polynomial in the
// interval index n,
//
//   dD_n = f_0 * 1 + f_1 * (n - 1) + ...          (m parameters for order m)
//
// and eliminating all ranges but the newest one d_q via the ratio chain gives
// one linear equation per interval i = 1..q in the unknowns [d_q, f]:
//
//   (p_i - 1) d_q  +  sum_j [ phi_j(i) + (1 - p_i) * sum_{k=i+1..q} phi_j(k) ] f_j
//       =  sum_{k=i..q} dC_k  -  p_i * sum_{k=i+1..q} dC_k
//
// with phi_0(k) = 1, phi_1(k) = k - 1. The system is square when
// q = order + 1. Only the ratios of the heights enter, never their absolute
// scale or the camera intrinsics, so the estimate is independent of the
// object's class or true size.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorange/geometry.hpp"

namespace monorange::solver {

class NonPositiveHeight : public std::runtime_error {
 public:
  explicit NonPositiveHeight(const std::string& what) : std::runtime_error(what) {}
};

class OrderMismatch : public std::runtime_error {
 public:
  explicit OrderMismatch(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kDefaultEpsSingular = 1e-6;

/// One solver input: q+1 keyframe observations of a single track.
/// Heights may be pixels or metres; only their ratios are consumed.
struct KeyframeTriple {
  std::vector<double> heights;                        // H_0..H_q, all > 0
  std::vector<double> camera_deltas;                  // dC_1..dC_q, metres per interval
  double dt = 0.1;                                    // seconds per keyframe interval
  std::vector<std::array<double, 2>> bbox_centers;    // normalized (u, v) per keyframe
  std::vector<int> frame_ids;                         // strictly increasing
  std::int64_t track_id = 0;
};

struct SizeRatios {
  std::vector<double> p;  // p_n = H_n / H_{n-1}, n = 1..q
};

struct LinearSystem {
  std::size_t q = 0;
  std::vector<double> a;  // row-major q x q
  std::vector<double> b;  // length q
  std::vector<std::string> unknown_labels;  // "d_q" then motion parameters

  double& at(std::size_t i, std::size_t j) { return a[i * q + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * q + j]; }
};

enum class SolveStatus { Ok, Degenerate };

struct DistanceEstimate {
  double range = 0.0;                  // d_q, metres
  std::vector<double> motion_params;   // object displacement params, metres per interval
  std::optional<Vec3> cartesian;       // filled by callers that know the ray
  double condition_number = 0.0;       // inf-norm condition of the solved system
  SolveStatus status = SolveStatus::Degenerate;

  bool ok() const { return status == SolveStatus::Ok; }
};

inline double range_to_distance(const Vec3& cartesian) { return cartesian.norm(); }

inline SizeRatios size_ratios(std::span<const double> heights) {
  if (heights.size() < 2)
    throw NonPositiveHeight("size_ratios: need at least two heights, got " +
                            std::to_string(heights.size()));
  for (std::size_t i = 0; i < heights.size(); ++i) {
    if (!(heights[i] > 0.0))
      throw NonPositiveHeight("size_ratios: height[" + std::to_string(i) +
                              "] = " + std::to_string(heights[i]) + " is not positive");
  }
  SizeRatios r;
  r.p.reserve(heights.size() - 1);
  for (std::size_t n = 1; n < heights.size(); ++n) r.p.push_back(heights[n] / heights[n - 1]);
  return r;
}

/// Assembles the q x q system for the given motion order (0 stationary,
/// 1 constant velocity, 2 constant acceleration). Requires q = order + 1.
inline LinearSystem build_system(const SizeRatios& ratios, std::span<const double> camera_deltas,
                                 int motion_order) {
  const std::size_t q = ratios.p.size();
  if (motion_order < 0 || motion_order > 2)
    throw OrderMismatch("build_system: unsupported motion order " + std::to_string(motion_order));
  if (q != static_cast<std::size_t>(motion_order) + 1)
    throw OrderMismatch("build_system: need q = order + 1 ratios (order " +
                        std::to_string(motion_order) + ", got q = " + std::to_string(q) + ")");
  if (camera_deltas.size() != q)
    throw OrderMismatch("build_system: need q = " + std::to_string(q) + " camera deltas, got " +
                        std::to_string(camera_deltas.size()));

  // Motion basis phi_j(k) over interval index k = 1..q.
  const auto phi = [](int j, std::size_t k) -> double {
    return j == 0 ? 1.0 : static_cast<double>(k - 1);
  };

  LinearSystem sys;
  sys.q = q;
  sys.a.assign(q * q, 0.0);
  sys.b.assign(q, 0.0);
  sys.unknown_labels = {"d_q"};
  if (motion_order >= 1) sys.unknown_labels.push_back("dD_1");
  if (motion_order >= 2) sys.unknown_labels.push_back("dD_step");

  for (std::size_t i = 1; i <= q; ++i) {
    const double pi = ratios.p[i - 1];
    sys.at(i - 1, 0) = pi - 1.0;
    for (int j = 0; j < motion_order; ++j) {
      double tail = 0.0;
      for (std::size_t k = i + 1; k <= q; ++k) tail += phi(j, k);
      sys.at(i - 1, static_cast<std::size_t>(j) + 1) = phi(j, i) + (1.0 - pi) * tail;
    }
    double rhs = 0.0;
    for (std::size_t k = i; k <= q; ++k) rhs += camera_deltas[k - 1];
    double rhs_tail = 0.0;
    for (std::size_t k = i + 1; k <= q; ++k) rhs_tail += camera_deltas[k - 1];
    sys.b[i - 1] = rhs - pi * rhs_tail;
  }
  return sys;
}

namespace detail {

/// LU factorization with partial pivoting, in place. Returns false on an
/// exactly zero pivot. pivot_min/pivot_max report |pivot| extremes.
inline bool lu_factor(std::vector<double>& a, std::size_t n, std::vector<std::size_t>& perm,
                      double& pivot_min, double& pivot_max) {
  perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  pivot_min = std::numeric_limits<double>::infinity();
  pivot_max = 0.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double best_abs = std::abs(a[perm[col] * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(a[perm[r] * n + col]);
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    std::swap(perm[col], perm[best]);
    pivot_min = std::min(pivot_min, best_abs);
    pivot_max = std::max(pivot_max, best_abs);
    if (best_abs == 0.0) return false;
    const double piv = a[perm[col] * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = a[perm[r] * n + col] / piv;
      a[perm[r] * n + col] = m;
      for (std::size_t c = col + 1; c < n; ++c) a[perm[r] * n + c] -= m * a[perm[col] * n + c];
    }
  }
  return true;
}

inline void lu_solve(const std::vector<double>& lu, std::size_t n,
                     const std::vector<std::size_t>& perm, std::span<const double> rhs,
                     std::span<double> x) {
  // Forward substitution with the permuted unit-lower factor.
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= lu[perm[i] * n + j] * x[j];
    x[i] = s;
  }
  // Back substitution.
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= lu[perm[ii] * n + j] * x[j];
    x[ii] = s / lu[perm[ii] * n + ii];
  }
}

inline double norm_inf(const std::vector<double>& a, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(a[i * n + j]);
    best = std::max(best, row);
  }
  return best;
}

}  // namespace detail

/// Direct dense solve with partial pivoting and an exact inf-norm condition
/// number (the systems are tiny). Never throws on singular input: reports
/// status = Degenerate when the pivot ratio or condition crosses
/// eps_singular, or when the solved range is not positive.
inline DistanceEstimate solve(const LinearSystem& system, double eps_singular = kDefaultEpsSingular) {
  const std::size_t n = system.q;
  if (n == 0 || system.a.size() != n * n || system.b.size() != n)
    throw std::invalid_argument("solve: malformed linear system");
  if (!(eps_singular > 0.0)) throw std::invalid_argument("solve: eps_singular must be positive");

  DistanceEstimate est;
  std::vector<double> lu = system.a;
  std::vector<std::size_t> perm;
  double pivot_min = 0.0, pivot_max = 0.0;
  const bool factored = detail::lu_factor(lu, n, perm, pivot_min, pivot_max);
  if (!factored) {
    est.condition_number = std::numeric_limits<double>::infinity();
    est.status = SolveStatus::Degenerate;
    return est;
  }

  std::vector<double> x(n, 0.0);
  detail::lu_solve(lu, n, perm, system.b, x);

  // ||A^-1||_inf via explicit columns of the inverse.
  std::vector<double> inv(n * n, 0.0);
  std::vector<double> e(n, 0.0), col(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e.assign(n, 0.0);
    e[j] = 1.0;
    detail::lu_solve(lu, n, perm, e, col);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  est.condition_number = detail::norm_inf(system.a, n) * detail::norm_inf(inv, n);

  est.range = x[0];
  est.motion_params.assign(x.begin() + 1, x.end());

  const bool pivot_bad = pivot_max == 0.0 || pivot_min / pivot_max < eps_singular;
  const bool cond_bad = !(est.condition_number < 1.0 / eps_singular);
  const bool range_bad = !(est.range > 0.0);
  est.status = (pivot_bad || cond_bad || range_bad) ? SolveStatus::Degenerate : SolveStatus::Ok;
  return est;
}

/// Constant-velocity (q = 2) closed form:
///   d_2 = (dC_1 - dC_2) / (p_1 p_2 - 2 p_2 + 1).
/// The denominator vanishes exactly when the camera-object relative velocity
/// is constant, which is the unobservable configuration for this order.
inline DistanceEstimate solve_q2_closed_form(double p1, double p2, double dc1, double dc2,
                                             double eps_singular = kDefaultEpsSingular) {
  if (!(p1 > 0.0) || !(p2 > 0.0))
    throw NonPositiveHeight("solve_q2_closed_form: size ratios must be positive");
  if (!(eps_singular > 0.0))
    throw std::invalid_argument("solve_q2_closed_form: eps_singular must be positive");

  DistanceEstimate est;
  const double denom = p1 * p2 - 2.0 * p2 + 1.0;
  const double numer = dc1 - dc2;

  // Condition diagnostic from the equivalent 2x2 system.
  const double a00 = p1 - 1.0, a01 = 2.0 - p1, a10 = p2 - 1.0, a11 = 1.0;
  const double det = denom;  // a00*a11 - a01*a10 expands to the same expression
  const double norm_a = std::max(std::abs(a00) + std::abs(a01), std::abs(a10) + std::abs(a11));
  if (det != 0.0) {
    const double norm_inv =
        std::max(std::abs(a11) + std::abs(a01), std::abs(a10) + std::abs(a00)) / std::abs(det);
    est.condition_number = norm_a * norm_inv;
  } else {
    est.condition_number = std::numeric_limits<double>::infinity();
  }

  if (std::abs(denom) < eps_singular * std::max(1.0, std::abs(numer))) {
    est.status = SolveStatus::Degenerate;
    return est;
  }
  est.range = numer / denom;
  est.motion_params = {dc2 - (p2 - 1.0) * est.range};
  est.status = est.range > 0.0 ? SolveStatus::Ok : SolveStatus::Degenerate;
  return est;
}

/// Ratio -> system -> solve pipeline over one triple.
inline DistanceEstimate estimate_range(const KeyframeTriple& triple, int motion_order,
                                       double eps_singular = kDefaultEpsSingular) {
  if (triple.camera_deltas.size() + 1 != triple.heights.size())
    throw OrderMismatch("estimate_range: need one camera delta per interval");
  const SizeRatios ratios = size_ratios(triple.heights);
  return solve(build_system(ratios, triple.camera_deltas, motion_order), eps_singular);
}

/// Converts per-interval motion parameters to per-second units.
inline std::vector<double> motion_params_per_second(const DistanceEstimate& est, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("motion_params_per_second: dt must be positive");
  std::vector<double> out = est.motion_params;
  for (double& v : out) v /= dt;
  return out;
}

}  // namespace monorange::solver
