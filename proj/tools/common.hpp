#pragma once

// Shared plumbing for the CLI commands: option structs, file helpers, a
// slot-based parallel loop (workers write disjoint indices, so results are
// deterministic regardless of scheduling), and the label->detection bridge.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "monorange/geometry.hpp"
#include "monorange/ingest.hpp"
#include "monorange/kinematics.hpp"
#include "monorange/solver.hpp"
#include "monorange/trackbuf.hpp"

namespace morcli {

using nlohmann::json;

inline std::string default_out_dir() {
  if (const char* env = std::getenv("MONORANGE_OUT_DIR")) return env;
  return "out";
}

inline void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return in;
}

/// Runs fn(0..n-1) over a bounded pool; each index owns its output slot.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const auto worker_count = static_cast<std::size_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < worker_count; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += worker_count) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Label record -> detection. Boxes are clamped to the frame (out-of-frame
/// spill then touches the border and the edge filter handles it); the
/// truncated/occluded numeric conventions collapse to booleans (any nonzero
/// value means not fully visible).
inline monorange::trackbuf::Detection to_detection(const monorange::ingest::LabelRecord& rec,
                                                   double image_width, double image_height) {
  monorange::trackbuf::Detection det;
  det.frame_id = rec.frame;
  det.track_id = rec.track_id;
  det.bbox = {std::max(0.0, rec.bbox[0]), std::max(0.0, rec.bbox[1]),
              std::min(image_width, rec.bbox[2]), std::min(image_height, rec.bbox[3])};
  det.class_label = rec.object_type;
  det.truncated = rec.truncated != 0.0;
  det.occluded = rec.occluded != 0;
  det.image_width = image_width;
  det.image_height = image_height;
  det.gt_location = rec.location;
  return det;
}

/// Scalar camera displacement provider: integrates IMU velocity between the
/// two frames and projects the displacement onto the unit ray toward the
/// current detection's BBox center. IMU axes are vehicle forward/left/up;
/// camera axes are x right, y down, z forward.
class ImuDeltaProvider {
 public:
  ImuDeltaProvider(std::vector<monorange::ingest::ImuRecord> records, double focal_px,
                   double image_width, double image_height)
      : records_(std::move(records)),
        focal_px_(focal_px),
        cx_(image_width / 2.0),
        cy_(image_height / 2.0) {}

  double operator()(int frame_a, int frame_b,
                    const monorange::trackbuf::Detection& current) const {
    const monorange::Vec3 v = monorange::ingest::camera_displacement(records_, frame_a, frame_b);
    const monorange::Vec3 cam_disp{-v.y, -v.z, v.x};
    const auto c = current.center_normalized();
    const monorange::Vec3 ray = monorange::kinematics::ray_adapter_px(
        c[0] * current.image_width, c[1] * current.image_height, focal_px_, cx_, cy_, 1.0);
    return cam_disp.dot(ray);
  }

  const std::vector<monorange::ingest::ImuRecord>& records() const { return records_; }

 private:
  std::vector<monorange::ingest::ImuRecord> records_;
  double focal_px_;
  double cx_, cy_;
};

// --- option structs --------------------------------------------------------

struct SimulateOptions {
  int scenes = 1000;
  int order = 1;
  std::uint64_t seed = 1;
  double noise_height = 0.0;
  double noise_imu = 0.0;
  double eps = monorange::solver::kDefaultEpsSingular;
  double dist_min = 5.0;
  double dist_max = 80.0;
  double bin_width = 5.0;
  double fps = 10.0;
  int stride = 5;
  int threads = 1;
  bool degenerate_ensemble = false;  // constant-relative-velocity scenes
  std::string out_dir = default_out_dir();
  std::string scene_file;            // single-scene mode when set
};

struct EvaluateOptions {
  std::vector<std::string> label_files;
  std::vector<std::string> imu_files;
  std::vector<std::string> pred_files;  // optional; parallel to label_files
  std::string out_dir = default_out_dir();
  double fps = 10.0;
  int stride = 5;
  int lookback = 10;
  double eps = monorange::solver::kDefaultEpsSingular;
  double focal = 700.0;
  double image_width = 1242.0;
  double image_height = 375.0;
  double bin_width = 5.0;
  double score_floor = 0.0;
  int threads = 1;
};

struct ExportOptions {
  std::string label_file;
  std::string imu_file;
  std::string images_dir;
  std::string out_dir = default_out_dir();
  double fps = 10.0;
  int stride = 5;
  int lookback = 10;
  double eps = monorange::solver::kDefaultEpsSingular;
  double focal = 700.0;
};

struct IngestCheckOptions {
  std::vector<std::string> label_files;
  std::vector<std::string> imu_files;
  double fps = 10.0;
};

int run_simulate(const SimulateOptions& opt);
int run_evaluate(const EvaluateOptions& opt);
int run_export_features(const ExportOptions& opt);
int run_ingest_check(const IngestCheckOptions& opt);

}  // namespace morcli
