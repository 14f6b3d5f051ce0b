#pragma once

// Per-track observation cache. Detections stream in frame by frame; whenever
// a track has observations at every keyframe of the lookback scheme
// (n, n-stride, ..., n-lookback), one solver input is emitted. Emitted
// triples intentionally carry no class information: estimation downstream is
// computable from size ratios, centers and ego-motion alone.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "monorange/geometry.hpp"
#include "monorange/solver.hpp"

namespace monorange::trackbuf {

class DuplicateFrame : public std::runtime_error {
 public:
  explicit DuplicateFrame(const std::string& what) : std::runtime_error(what) {}
};

class MissingAnnotation : public std::runtime_error {
 public:
  explicit MissingAnnotation(const std::string& what) : std::runtime_error(what) {}
};

struct Detection {
  int frame_id = 0;
  std::int64_t track_id = 0;
  Box2D bbox;                        // pixels
  std::string class_label;           // evaluation grouping only; never estimation input
  std::optional<bool> truncated;
  std::optional<bool> occluded;
  double image_width = 0.0;          // pixels
  double image_height = 0.0;
  std::optional<Vec3> gt_location;   // metres, camera coords, when known

  double height() const { return bbox.height(); }
  std::array<double, 2> center_normalized() const {
    return {(bbox.left + bbox.right) / 2.0 / image_width,
            (bbox.top + bbox.bottom) / 2.0 / image_height};
  }
};

/// Keep unless any side coincides with or crosses an image border. Applied at
/// test/inference time.
inline bool edge_filter(const Detection& det) {
  return det.bbox.left > 0.0 && det.bbox.top > 0.0 && det.bbox.right < det.image_width &&
         det.bbox.bottom < det.image_height;
}

/// Keep only fully visible detections. Applied when exporting training
/// features; the annotations must be present there.
inline bool training_filter(const Detection& det) {
  if (!det.truncated.has_value() || !det.occluded.has_value())
    throw MissingAnnotation("training_filter: detection (track " + std::to_string(det.track_id) +
                            ", frame " + std::to_string(det.frame_id) +
                            ") lacks truncated/occluded annotations");
  return !*det.truncated && !*det.occluded;
}

struct KeyframeScheme {
  int lookback_frames = 10;
  int stride = 5;
  double frame_rate = 10.0;

  int interval_count() const { return lookback_frames / stride; }        // q
  int keyframe_count() const { return interval_count() + 1; }           // q + 1
  double interval_seconds() const { return static_cast<double>(stride) / frame_rate; }

  /// Ascending keyframes ending at `current`: current - lookback, ..., current.
  std::vector<int> keyframes(int current) const {
    std::vector<int> out;
    for (int f = current - lookback_frames; f <= current; f += stride) out.push_back(f);
    return out;
  }
};

/// One emission: the clean solver input plus the keyframe detections
/// (ascending frame order) for evaluation and feature assembly.
struct EmittedTriple {
  solver::KeyframeTriple triple;
  std::vector<Detection> detections;
};

class TrackCache {
 public:
  /// Scalar camera displacement between two frames, measured along the axis
  /// toward the object; `current` is the newest keyframe's detection so the
  /// provider can pick the ray. Absent provider means zero deltas.
  using CameraDeltaFn = std::function<double(int frame_a, int frame_b, const Detection& current)>;

  explicit TrackCache(KeyframeScheme scheme, std::size_t capacity = 0,
                      CameraDeltaFn camera_delta = nullptr)
      : scheme_(scheme),
        capacity_(capacity == 0 ? static_cast<std::size_t>(scheme.lookback_frames) + 1 : capacity),
        camera_delta_(std::move(camera_delta)) {
    if (scheme_.lookback_frames <= 0 || scheme_.stride <= 0 ||
        scheme_.lookback_frames % scheme_.stride != 0)
      throw std::invalid_argument("TrackCache: lookback must be a positive multiple of stride");
    if (!(scheme_.frame_rate > 0.0))
      throw std::invalid_argument("TrackCache: frame rate must be positive");
    if (capacity_ < static_cast<std::size_t>(scheme_.lookback_frames) + 1)
      throw std::invalid_argument("TrackCache: capacity must cover lookback + 1 frames");
  }

  const KeyframeScheme& scheme() const { return scheme_; }
  std::size_t track_count() const { return tracks_.size(); }
  std::size_t frame_count(std::int64_t track_id) const {
    const auto it = tracks_.find(track_id);
    return it == tracks_.end() ? 0 : it->second.size();
  }

  /// Stores one detection and emits a triple when the track covers every
  /// keyframe. Re-ingesting an identical detection is a no-op; a conflicting
  /// one for the same (track, frame) is an error.
  std::vector<EmittedTriple> ingest(const Detection& det) {
    validate(det);
    auto& frames = tracks_[det.track_id];
    const auto [it, inserted] = frames.emplace(det.frame_id, det);
    if (!inserted) {
      if (it->second.bbox == det.bbox) return {};
      throw DuplicateFrame("TrackCache: conflicting detection for track " +
                           std::to_string(det.track_id) + " at frame " +
                           std::to_string(det.frame_id));
    }
    while (frames.size() > capacity_) frames.erase(frames.begin());

    const auto wanted = scheme_.keyframes(det.frame_id);
    std::vector<const Detection*> dets;
    dets.reserve(wanted.size());
    for (const int f : wanted) {
      const auto fit = frames.find(f);
      if (fit == frames.end()) return {};
      dets.push_back(&fit->second);
    }

    EmittedTriple out;
    out.triple.dt = scheme_.interval_seconds();
    out.triple.track_id = det.track_id;
    for (const Detection* d : dets) {
      out.triple.heights.push_back(d->height());
      out.triple.bbox_centers.push_back(d->center_normalized());
      out.triple.frame_ids.push_back(d->frame_id);
      out.detections.push_back(*d);
    }
    for (std::size_t j = 1; j < dets.size(); ++j) {
      const double dc = camera_delta_
                            ? camera_delta_(dets[j - 1]->frame_id, dets[j]->frame_id, *dets.back())
                            : 0.0;
      out.triple.camera_deltas.push_back(dc);
    }
    return {std::move(out)};
  }

 private:
  static void validate(const Detection& det) {
    if (!det.bbox.well_formed())
      throw std::invalid_argument("TrackCache: malformed bbox for track " +
                                  std::to_string(det.track_id) + " at frame " +
                                  std::to_string(det.frame_id));
    if (!(det.image_width > 0.0) || !(det.image_height > 0.0))
      throw std::invalid_argument("TrackCache: detection needs positive image dimensions");
    if (det.bbox.left < 0.0 || det.bbox.top < 0.0 || det.bbox.right > det.image_width ||
        det.bbox.bottom > det.image_height)
      throw std::invalid_argument("TrackCache: bbox exceeds image bounds (track " +
                                  std::to_string(det.track_id) + ", frame " +
                                  std::to_string(det.frame_id) + ")");
  }

  KeyframeScheme scheme_;
  std::size_t capacity_;
  CameraDeltaFn camera_delta_;
  std::map<std::int64_t, std::map<int, Detection>> tracks_;
};

}  // namespace monorange::trackbuf
