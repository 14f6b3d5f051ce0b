// monorange: class-agnostic monocular distance estimation toolkit.
//
// Subcommands:
//   simulate         synthetic ensembles (or one configured scene) through
//                    the analytic estimator, with metric reports
//   evaluate         label/IMU sequences, optionally aligning detector
//                    outputs to ground truth first
//   export-features  network-input bundles (overlay + side vector) from a
//                    sequence with images
//   ingest-check     strict parse check of dataset files

#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"class-agnostic monocular distance estimation toolkit"};
  app.require_subcommand(1);

  morcli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "run synthetic scene ensembles");
  simulate->add_option("--scenes", sim.scenes, "number of random scenes");
  simulate->add_option("--order", sim.order, "object motion order (0, 1, 2)")
      ->check(CLI::Range(0, 2));
  simulate->add_option("--seed", sim.seed, "ensemble seed");
  simulate->add_option("--noise-height", sim.noise_height, "relative height noise std");
  simulate->add_option("--noise-imu", sim.noise_imu, "absolute camera-delta noise std (m)");
  simulate->add_option("--eps", sim.eps, "singularity threshold");
  simulate->add_option("--dist-min", sim.dist_min, "minimum initial range (m)");
  simulate->add_option("--dist-max", sim.dist_max, "maximum initial range (m)");
  simulate->add_option("--bin-width", sim.bin_width, "report bin width (m)");
  simulate->add_option("--fps", sim.fps, "frame rate");
  simulate->add_option("--stride", sim.stride, "frames per keyframe interval");
  simulate->add_option("--threads", sim.threads, "worker threads");
  simulate->add_flag("--degenerate-ensemble", sim.degenerate_ensemble,
                     "constant-relative-velocity scenes (unobservable geometry)");
  simulate->add_option("--scene", sim.scene_file, "single scene config file instead of an ensemble");
  simulate->add_option("--out", sim.out_dir, "output directory (default $MONORANGE_OUT_DIR or ./out)");

  morcli::EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate label/IMU sequences");
  evaluate->add_option("--labels", ev.label_files, "ground-truth label file(s)")->required();
  evaluate->add_option("--imu", ev.imu_files, "IMU file(s), paired with --labels")->required();
  evaluate->add_option("--pred", ev.pred_files, "detector output file(s) in label format");
  evaluate->add_option("--fps", ev.fps, "frame rate");
  evaluate->add_option("--stride", ev.stride, "keyframe stride (frames)");
  evaluate->add_option("--lookback", ev.lookback, "lookback window (frames)");
  evaluate->add_option("--eps", ev.eps, "singularity threshold");
  evaluate->add_option("--focal", ev.focal, "nominal focal length (px) for the delta projection");
  evaluate->add_option("--image-width", ev.image_width, "image width (px)");
  evaluate->add_option("--image-height", ev.image_height, "image height (px)");
  evaluate->add_option("--bin-width", ev.bin_width, "report bin width (m)");
  evaluate->add_option("--score-floor", ev.score_floor, "minimum alignment score");
  evaluate->add_option("--threads", ev.threads, "worker threads");
  evaluate->add_option("--out", ev.out_dir, "output directory");

  morcli::ExportOptions ex;
  auto* exportf = app.add_subcommand("export-features", "write network-input bundles");
  exportf->add_option("--labels", ex.label_file, "ground-truth label file")->required();
  exportf->add_option("--imu", ex.imu_file, "IMU file")->required();
  exportf->add_option("--images", ex.images_dir, "directory of %06d.png|pgm frames")->required();
  exportf->add_option("--fps", ex.fps, "frame rate");
  exportf->add_option("--stride", ex.stride, "keyframe stride (frames)");
  exportf->add_option("--lookback", ex.lookback, "lookback window (frames)");
  exportf->add_option("--eps", ex.eps, "singularity threshold");
  exportf->add_option("--focal", ex.focal, "nominal focal length (px)");
  exportf->add_option("--out", ex.out_dir, "output directory");

  morcli::IngestCheckOptions ic;
  auto* check = app.add_subcommand("ingest-check", "strict parse check of dataset files");
  check->add_option("--labels", ic.label_files, "label file(s)");
  check->add_option("--imu", ic.imu_files, "IMU file(s)");
  check->add_option("--fps", ic.fps, "frame rate");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return morcli::run_simulate(sim);
    if (evaluate->parsed()) return morcli::run_evaluate(ev);
    if (exportf->parsed()) return morcli::run_export_features(ex);
    if (check->parsed()) return morcli::run_ingest_check(ic);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
