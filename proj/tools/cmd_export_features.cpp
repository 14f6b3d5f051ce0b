// export-features: ground-truth sequences to network-input bundles. Only
// fully visible tracks survive the training filter (checked at every
// keyframe); each emitted triple yields one container file plus an index
// entry with a content hash, so re-runs are verifiable byte-for-byte.

#include <iomanip>
#include <map>

#include "common.hpp"
#include "monorange/feature_container.hpp"
#include "monorange/features.hpp"
#include "monorange/image_io.hpp"

namespace morcli {

namespace {

using namespace monorange;

std::string frame_image_path(const std::string& dir, int frame) {
  std::ostringstream name;
  name << std::setw(6) << std::setfill('0') << frame;
  for (const char* ext : {".png", ".pgm"}) {
    const std::string candidate = dir + "/" + name.str() + ext;
    if (std::filesystem::exists(candidate)) return candidate;
  }
  throw std::runtime_error(dir + "/" + name.str() + ".{png,pgm}: image not found");
}

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

int run_export_features(const ExportOptions& opt) {
  if (opt.lookback % opt.stride != 0)
    throw std::runtime_error("export-features: lookback must be a multiple of stride");
  const trackbuf::KeyframeScheme scheme{opt.lookback, opt.stride, opt.fps};
  if (scheme.keyframe_count() != 3)
    throw std::runtime_error("export-features: the network-input contract takes exactly 3 "
                             "keyframes (lookback = 2 * stride)");

  auto labels_in = open_input(opt.label_file);
  const auto records = ingest::parse_labels(labels_in);
  auto imu_in = open_input(opt.imu_file);
  const auto imu_records = ingest::parse_imu(imu_in, opt.fps);

  std::map<int, std::vector<const ingest::LabelRecord*>> by_frame;
  for (const auto& r : records)
    if (!r.excluded) by_frame[r.frame].push_back(&r);

  ensure_dir(opt.out_dir);
  std::map<int, features::GrayPatch> image_cache;
  double image_w = 0.0, image_h = 0.0;
  const auto frame_image = [&](int frame) -> const features::GrayPatch& {
    auto it = image_cache.find(frame);
    if (it == image_cache.end()) {
      it = image_cache.emplace(frame, image_io::load_gray(frame_image_path(opt.images_dir, frame)))
               .first;
    }
    return it->second;
  };

  ImuDeltaProvider delta(imu_records, opt.focal, 1.0, 1.0);  // dims patched once known
  std::optional<trackbuf::TrackCache> cache;
  json index_entries = json::array();
  std::size_t bundles = 0, filtered = 0, degenerate = 0;

  for (const auto& [frame, recs] : by_frame) {
    const auto& img = frame_image(frame);
    if (image_w == 0.0) {
      image_w = img.width;
      image_h = img.height;
      delta = ImuDeltaProvider(imu_records, opt.focal, image_w, image_h);
      cache.emplace(scheme, 0, [&delta](int a, int b, const trackbuf::Detection& cur) {
        return delta(a, b, cur);
      });
    }
    // Drop stale frames from the image cache.
    while (!image_cache.empty() && image_cache.begin()->first < frame - opt.lookback)
      image_cache.erase(image_cache.begin());

    for (const auto* rec : recs) {
      const auto det = to_detection(*rec, image_w, image_h);
      for (const auto& emission : cache->ingest(det)) {
        bool keep = true;
        for (const auto& d : emission.detections)
          if (!trackbuf::training_filter(d)) keep = false;
        if (!keep) {
          ++filtered;
          continue;
        }

        std::array<features::GrayPatch, 3> patches;
        std::array<double, 3> heights{};
        std::array<std::array<double, 2>, 3> centers{};
        for (std::size_t i = 0; i < 3; ++i) {
          const auto& d = emission.detections[i];
          patches[i] = features::crop(frame_image(d.frame_id), d.bbox);
          heights[i] = d.height();
          centers[i] = d.center_normalized();
        }

        const auto analytic = solver::estimate_range(emission.triple, 1, opt.eps);
        if (!analytic.ok()) ++degenerate;
        const std::array<int, 3> kf = {emission.triple.frame_ids[0], emission.triple.frame_ids[1],
                                       emission.triple.frame_ids[2]};
        features::FeatureBundle bundle;
        bundle.overlay = features::make_overlay(patches, heights);
        bundle.side = features::make_side_vector(ingest::imu_features(imu_records, kf), centers,
                                                 analytic);
        bundle.target = det.gt_location;

        std::ostringstream name;
        name << "track" << std::setw(4) << std::setfill('0') << det.track_id << "_frame"
             << std::setw(6) << std::setfill('0') << frame << ".mrf";
        const auto bytes = feature_container::serialize(bundle);
        write_file(opt.out_dir + "/" + name.str(),
                   std::string(bytes.begin(), bytes.end()));

        std::ostringstream hash;
        hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes);
        index_entries.push_back(json{{"file", name.str()},
                                     {"track_id", det.track_id},
                                     {"frame", frame},
                                     {"class", det.class_label},
                                     {"has_target", bundle.target.has_value()},
                                     {"analytic_degenerate", bundle.side.analytic_degenerate},
                                     {"fnv64", hash.str()}});
        ++bundles;
      }
    }
  }

  json index{{"config", json{{"command", "export-features"},
                             {"labels", opt.label_file},
                             {"imu", opt.imu_file},
                             {"images", opt.images_dir},
                             {"fps", opt.fps},
                             {"stride", opt.stride},
                             {"lookback", opt.lookback},
                             {"eps_singular", opt.eps},
                             {"focal_px", opt.focal}}},
             {"bundles", index_entries},
             {"counts", json{{"written", bundles},
                             {"filtered_not_fully_visible", filtered},
                             {"analytic_degenerate", degenerate}}}};
  write_file(opt.out_dir + "/index.json", index.dump(2) + "\n");
  std::cout << "wrote " << bundles << " bundles (" << filtered << " filtered, " << degenerate
            << " with degenerate analytic input) to " << opt.out_dir << "\n";
  return 0;
}

}  // namespace morcli
