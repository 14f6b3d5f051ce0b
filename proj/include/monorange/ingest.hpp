#pragma once

// Dataset ingestion: tracking-label text files (17 whitespace-separated
// columns per object-frame line) and oxts-style IMU files, plus velocity
// integration and the 27-value per-triple IMU feature block.
//
// Label columns, in order:
//   frame track_id object_type truncated occluded alpha
//   bbox_left bbox_top bbox_right bbox_bottom
//   height width length x y z rotation_y
//
// IMU line formats, selected by column count:
//   >= 23 columns  oxts: forward/left/up velocity at 1-based columns 9-11,
//                  accelerations at 15-17, angular rates at 21-23; the other
//                  columns are carried by the dataset but not consumed.
//   9 columns      compact fixture: vf vl vu af al au wf wl wu
//   6 columns      compact fixture without accelerometer: vf vl vu wf wl wu
//                  (accelerations are then differenced from velocities)
//
// Parsing is strict: wrong column counts, non-numeric or non-finite fields
// raise ParseError with line and column. Dataset bugs must surface here, not
// downstream.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorange/geometry.hpp"

namespace monorange::ingest {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + reason),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class RangeError : public std::runtime_error {
 public:
  explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

struct LabelRecord {
  int frame = 0;
  std::int64_t track_id = 0;
  std::string object_type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  std::array<double, 4> bbox{};        // left, top, right, bottom (pixels)
  std::array<double, 3> dimensions{};  // height, width, length (metres)
  Vec3 location;                       // camera coordinates (metres)
  double rotation_y = 0.0;
  bool excluded = false;               // Misc / DontCare
};

struct ImuRecord {
  Vec3 velocity;                      // forward, left, up (m/s)
  std::optional<Vec3> acceleration;   // m/s^2 when the format carries it
  Vec3 angular_rate;                  // rad/s
  double timestamp = 0.0;             // seconds, synthesized from the frame rate
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline double to_double(const std::string& tok, int line, int column) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError(line, column, "expected a number, got '" + tok + "'");
  if (!std::isfinite(v)) throw ParseError(line, column, "non-finite value '" + tok + "'");
  return v;
}

inline std::int64_t to_int(const std::string& tok, int line, int column) {
  std::int64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(line, column, "expected an integer, got '" + tok + "'");
  return v;
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

}  // namespace detail

inline std::vector<LabelRecord> parse_labels(std::istream& in) {
  std::vector<LabelRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;  // blank lines tolerated
    if (tok.size() != 17)
      throw ParseError(lineno, static_cast<int>(tok.size()),
                       "expected 17 fields, got " + std::to_string(tok.size()));
    LabelRecord r;
    int c = 1;
    r.frame = static_cast<int>(detail::to_int(tok[0], lineno, c++));
    r.track_id = detail::to_int(tok[1], lineno, c++);
    r.object_type = tok[2];
    ++c;
    r.truncated = detail::to_double(tok[3], lineno, c++);
    r.occluded = static_cast<int>(detail::to_int(tok[4], lineno, c++));
    r.alpha = detail::to_double(tok[5], lineno, c++);
    for (int i = 0; i < 4; ++i) r.bbox[i] = detail::to_double(tok[6 + i], lineno, c++);
    for (int i = 0; i < 3; ++i) r.dimensions[i] = detail::to_double(tok[10 + i], lineno, c++);
    r.location.x = detail::to_double(tok[13], lineno, c++);
    r.location.y = detail::to_double(tok[14], lineno, c++);
    r.location.z = detail::to_double(tok[15], lineno, c++);
    r.rotation_y = detail::to_double(tok[16], lineno, c++);
    if (!(r.bbox[0] < r.bbox[2]) || !(r.bbox[1] < r.bbox[3]))
      throw ParseError(lineno, 7, "bbox must satisfy left < right and top < bottom");
    r.excluded = r.object_type == "Misc" || r.object_type == "DontCare";
    out.push_back(std::move(r));
  }
  return out;
}

inline void serialize_labels(std::ostream& out, std::span<const LabelRecord> records) {
  for (const auto& r : records) {
    out << r.frame << ' ' << r.track_id << ' ' << r.object_type << ' '
        << detail::format_double(r.truncated) << ' ' << r.occluded << ' '
        << detail::format_double(r.alpha);
    for (const double v : r.bbox) out << ' ' << detail::format_double(v);
    for (const double v : r.dimensions) out << ' ' << detail::format_double(v);
    out << ' ' << detail::format_double(r.location.x) << ' ' << detail::format_double(r.location.y)
        << ' ' << detail::format_double(r.location.z) << ' '
        << detail::format_double(r.rotation_y) << '\n';
  }
}

inline std::vector<ImuRecord> parse_imu(std::istream& in, double frame_rate) {
  if (!(frame_rate > 0.0)) throw std::invalid_argument("parse_imu: frame_rate must be positive");
  std::vector<ImuRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    std::vector<double> v(tok.size());
    for (std::size_t i = 0; i < tok.size(); ++i)
      v[i] = detail::to_double(tok[i], lineno, static_cast<int>(i) + 1);

    ImuRecord rec;
    if (tok.size() >= 23) {
      rec.velocity = {v[8], v[9], v[10]};
      rec.acceleration = Vec3{v[14], v[15], v[16]};
      rec.angular_rate = {v[20], v[21], v[22]};
    } else if (tok.size() == 9) {
      rec.velocity = {v[0], v[1], v[2]};
      rec.acceleration = Vec3{v[3], v[4], v[5]};
      rec.angular_rate = {v[6], v[7], v[8]};
    } else if (tok.size() == 6) {
      rec.velocity = {v[0], v[1], v[2]};
      rec.angular_rate = {v[3], v[4], v[5]};
    } else {
      throw ParseError(lineno, static_cast<int>(tok.size()),
                       "expected >= 23 (oxts), 9 or 6 fields, got " + std::to_string(tok.size()));
    }
    rec.timestamp = static_cast<double>(out.size()) / frame_rate;
    out.push_back(rec);
  }
  return out;
}

/// Writes the compact fixture format (9 or 6 columns) carrying exactly the
/// consumed numeric content.
inline void serialize_imu(std::ostream& out, std::span<const ImuRecord> records) {
  for (const auto& r : records) {
    out << detail::format_double(r.velocity.x) << ' ' << detail::format_double(r.velocity.y)
        << ' ' << detail::format_double(r.velocity.z);
    if (r.acceleration)
      out << ' ' << detail::format_double(r.acceleration->x) << ' '
          << detail::format_double(r.acceleration->y) << ' '
          << detail::format_double(r.acceleration->z);
    out << ' ' << detail::format_double(r.angular_rate.x) << ' '
        << detail::format_double(r.angular_rate.y) << ' '
        << detail::format_double(r.angular_rate.z) << '\n';
  }
}

/// Trapezoidal integral of velocity over [frame_a, frame_b]. Exact for
/// velocity profiles up to linear in time.
inline Vec3 camera_displacement(std::span<const ImuRecord> records, int frame_a, int frame_b) {
  if (frame_a >= frame_b)
    throw RangeError("camera_displacement: need frame_a < frame_b");
  if (frame_a < 0 || static_cast<std::size_t>(frame_b) >= records.size())
    throw RangeError("camera_displacement: frames [" + std::to_string(frame_a) + ", " +
                     std::to_string(frame_b) + "] outside record coverage (n = " +
                     std::to_string(records.size()) + ")");
  Vec3 disp;
  for (int f = frame_a; f < frame_b; ++f) {
    const auto& r0 = records[static_cast<std::size_t>(f)];
    const auto& r1 = records[static_cast<std::size_t>(f) + 1];
    const double dt = r1.timestamp - r0.timestamp;
    disp = disp + 0.5 * dt * (r0.velocity + r1.velocity);
  }
  return disp;
}

/// Angular acceleration by finite-differencing the angular rates: central in
/// the interior, one-sided at the boundaries.
inline Vec3 angular_acceleration(std::span<const ImuRecord> records, int frame) {
  const auto n = static_cast<int>(records.size());
  if (frame < 0 || frame >= n)
    throw RangeError("angular_acceleration: frame " + std::to_string(frame) + " outside records");
  if (n < 2) throw RangeError("angular_acceleration: need at least two records");
  const int lo = frame > 0 ? frame - 1 : frame;
  const int hi = frame < n - 1 ? frame + 1 : frame;
  const auto& a = records[static_cast<std::size_t>(lo)];
  const auto& b = records[static_cast<std::size_t>(hi)];
  const double dt = b.timestamp - a.timestamp;
  return (1.0 / dt) * (b.angular_rate - a.angular_rate);
}

namespace detail {

inline Vec3 acceleration_at(std::span<const ImuRecord> records, int frame) {
  const auto& rec = records[static_cast<std::size_t>(frame)];
  if (rec.acceleration) return *rec.acceleration;
  const auto n = static_cast<int>(records.size());
  if (n < 2) throw RangeError("imu_features: cannot difference velocity from one record");
  const int lo = frame > 0 ? frame - 1 : frame;
  const int hi = frame < n - 1 ? frame + 1 : frame;
  const auto& a = records[static_cast<std::size_t>(lo)];
  const auto& b = records[static_cast<std::size_t>(hi)];
  return (1.0 / (b.timestamp - a.timestamp)) * (b.velocity - a.velocity);
}

}  // namespace detail

/// The 27-value camera-state block for one keyframe triple: per keyframe
/// (oldest first) velocity xyz, acceleration xyz, angular acceleration xyz.
struct ImuFeatures {
  std::array<double, 27> values{};
  bool accelerations_measured = true;
};

inline ImuFeatures imu_features(std::span<const ImuRecord> records,
                                const std::array<int, 3>& keyframes) {
  ImuFeatures out;
  std::size_t k = 0;
  for (const int frame : keyframes) {
    if (frame < 0 || static_cast<std::size_t>(frame) >= records.size())
      throw RangeError("imu_features: keyframe " + std::to_string(frame) + " outside records");
    const auto& rec = records[static_cast<std::size_t>(frame)];
    if (!rec.acceleration) out.accelerations_measured = false;
    const Vec3 accel = detail::acceleration_at(records, frame);
    const Vec3 alpha = angular_acceleration(records, frame);
    for (const double v : {rec.velocity.x, rec.velocity.y, rec.velocity.z, accel.x, accel.y,
                           accel.z, alpha.x, alpha.y, alpha.z})
      out.values[k++] = v;
  }
  return out;
}

}  // namespace monorange::ingest
