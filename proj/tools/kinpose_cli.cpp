// kinpose command line: synth | train | infer | eval | bench | render.
// Exit codes: 0 success, 2 validation error, 1 runtime failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kinpose/cascade.hpp"
#include "kinpose/config.hpp"
#include "kinpose/dataset.hpp"
#include "kinpose/eval.hpp"
#include "kinpose/model_io.hpp"
#include "kinpose/parallel.hpp"

namespace {

using namespace kinpose;

SkeletonModel resolve_skeleton(const std::string& path) {
  if (path.empty()) return SkeletonModel::default_model();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open skeleton: " + path);
  nlohmann::json j;
  in >> j;
  return SkeletonModel::from_json(j);
}

void check_hash(const std::string& dataset_hash, const SkeletonModel& skel) {
  if (dataset_hash != skel.hash())
    throw CLI::ValidationError(
        "skeleton hash mismatch: dataset has " + dataset_hash +
        ", configured skeleton is " + skel.hash());
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& config, const SkeletonModel& skel,
              const std::string& out_dir, int frames) {
  synth_dataset(out_dir, skel, config.camera, config.motion, frames,
                config.seed, config.workers);
  std::cout << "dataset: " << out_dir << "\n"
            << "  frames: " << frames << "\n"
            << "  seed: " << config.seed << "\n"
            << "  camera: " << config.camera.width << "x"
            << config.camera.height << " fx=" << config.camera.fx << "\n"
            << "  skeleton_hash: " << skel.hash() << "\n";
  return 0;
}

int cmd_train(const RunConfig& config, const SkeletonModel& skel,
              const std::string& data_dir, const std::string& out_model,
              const std::string& export_json) {
  const DatasetManifest manifest = read_manifest(data_dir);
  check_hash(manifest.skeleton_hash, skel);
  const std::vector<Frame> frames = load_dataset(data_dir, manifest);

  ModelFile file;
  file.objective = config.cascade.objective;
  file.config_echo = config.to_json().dump();
  TrainTrace trace;
  if (config.cascade.objective == ObjectiveKind::kPosition) {
    auto result = train_position_cascade(frames, skel, manifest.camera,
                                         config.cascade, config.seed,
                                         config.workers);
    file.position = std::move(result.model);
    trace = std::move(result.trace);
  } else {
    auto result = train_cascade(frames, skel, manifest.camera, config.cascade,
                                config.seed, config.workers);
    file.cascade = std::move(result.model);
    trace = std::move(result.trace);
  }
  save_model(out_model, file);

  std::printf("initial training loss: %.6f m^2\n", trace.initial_loss);
  for (const auto& e : trace.entries)
    std::printf("stage %-9s h=%-2d beta=%-8.4f loss=%-12.6f err=%.2f cm\n",
                section_name(e.section), e.stage, e.beta, e.loss_after,
                e.section_err_m * 100.0);
  std::cout << "model: " << out_model << "\n";
  if (!export_json.empty()) {
    std::ofstream out(export_json);
    out << model_to_json(file).dump(2) << '\n';
    std::cout << "debug dump: " << export_json << "\n";
  }
  return 0;
}

int cmd_infer(const RunConfig& config, const SkeletonModel& skel,
              const std::string& model_path, const std::string& data_dir,
              const std::string& out_poses) {
  const ModelFile model = load_model(model_path);
  if (model.objective == ObjectiveKind::kPosition)
    throw CLI::ValidationError(
        "infer emits pose vectors; position-baseline models only support "
        "`eval` and `bench`");
  if (model.cascade.skeleton_hash != skel.hash())
    throw CLI::ValidationError("skeleton hash mismatch: model has " +
                               model.cascade.skeleton_hash +
                               ", configured skeleton is " + skel.hash());
  const DatasetManifest manifest = read_manifest(data_dir);
  const std::vector<Frame> frames = load_dataset(data_dir, manifest);

  std::vector<std::pair<int, Pose>> out(frames.size());
  parallel_for(int(frames.size()), config.workers, [&](int i) {
    out[i] = {frames[i].frame_id,
              infer(model.cascade, frames[i].image, manifest.camera, skel)};
  });
  write_poses_json(out_poses, out);
  std::cout << "estimates: " << out_poses << " (" << frames.size()
            << " frames)\n";
  return 0;
}

int cmd_eval(const RunConfig& config, const SkeletonModel& skel,
             const std::string& model_path, const std::string& poses_path,
             const std::string& data_dir, const std::string& out_report,
             const std::string& curve_csv) {
  const DatasetManifest manifest = read_manifest(data_dir);
  check_hash(manifest.skeleton_hash, skel);
  const std::vector<Frame> frames = load_dataset(data_dir, manifest);

  EvalReport report;
  if (!poses_path.empty()) {
    std::vector<std::optional<Pose>> est(frames.size());
    for (const auto& [id, q] : read_poses_json(poses_path)) {
      if (id < 0 || id >= int(frames.size()))
        throw CLI::ValidationError("poses file references unknown frame " +
                                   std::to_string(id));
      est[id] = q;
    }
    std::vector<Mat3X> truths, estimates;
    for (size_t i = 0; i < frames.size(); ++i) {
      if (!frames[i].truth || !est[i]) continue;
      truths.push_back(forward_kinematics(skel, *frames[i].truth));
      estimates.push_back(forward_kinematics(skel, *est[i]));
    }
    if (estimates.empty())
      throw CLI::ValidationError("no overlapping frames between poses file "
                                 "and dataset ground truth");
    report = evaluate_positions(estimates, truths, skel,
                                default_thresholds_cm());
    report.model_id = "poses:" + poses_path;
  } else {
    const ModelFile model = load_model(model_path);
    report = evaluate_model(model, frames, skel, manifest.camera,
                            config.workers);
    report.model_id = model_path;
  }

  {
    std::ofstream out(out_report);
    if (!out) throw std::runtime_error("cannot write " + out_report);
    out << report.to_json().dump(2) << '\n';
  }
  if (!curve_csv.empty()) {
    std::ofstream out(curve_csv);
    if (!out) throw std::runtime_error("cannot write " + curve_csv);
    out << report.curve_csv();
  }
  std::printf("frames: %d\n", report.frames);
  std::printf("mean per-joint RMSE: %.3f cm\n", report.mean_rmse_cm);
  std::printf("bone-length error:   %.6f cm\n", report.bone_err_mean_cm);
  std::cout << "report: " << out_report << "\n";
  return 0;
}

int cmd_bench(const SkeletonModel& skel, const std::string& model_path,
              const std::string& data_dir, int reps) {
  const ModelFile model = load_model(model_path);
  const DatasetManifest manifest = read_manifest(data_dir);
  const std::vector<Frame> frames = load_dataset(data_dir, manifest);

  const BenchReport r = benchmark(model, frames, skel, manifest.camera, reps);
  std::printf("frames: %d  reps: %d  wall: %.3f s\n", r.frames, r.reps,
              r.seconds);
  std::printf("throughput: %.1f fps (CPU single thread)\n", r.fps);
  std::printf("features/frame: mean %.1f, max %llu, bound %llu\n",
              r.mean_features_per_frame,
              (unsigned long long)r.max_features_per_frame,
              (unsigned long long)r.feature_bound);
  std::printf("initialization: %.3f ms/frame\n",
              r.init_seconds_per_frame * 1e3);
  for (const auto& [name, secs] : r.section_seconds)
    std::printf("  section %-9s %.3f ms/frame\n", name.c_str(), secs * 1e3);
  std::printf("reference (reported): kinematic 100 fps, no-kinematic 120 fps,"
              " Kinect v2 30 fps\n");
  return 0;
}

// ---------------------------------------------------------------------------
// render: grayscale PGM of a depth frame with projected skeletons overdrawn.

void draw_line(std::vector<unsigned char>& img, int w, int h, double x0,
               double y0, double x1, double y1, unsigned char value) {
  const int steps = std::max(
      2, int(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1);
  for (int s = 0; s < steps; ++s) {
    const double t = double(s) / (steps - 1);
    const int x = int(std::lround(x0 + t * (x1 - x0)));
    const int y = int(std::lround(y0 + t * (y1 - y0)));
    if (x >= 0 && x < w && y >= 0 && y < h) img[size_t(y) * w + x] = value;
  }
}

void overlay_skeleton(std::vector<unsigned char>& img, const CameraModel& cam,
                      const SkeletonModel& skel, const Pose& pose,
                      unsigned char value) {
  const Mat3X pts = forward_kinematics(skel, pose);
  for (int p = 1; p < skel.point_count(); ++p) {
    const int parent = skel.is_end_site(p) ? skel.point_owner_joint(p)
                                           : skel.joints()[p].parent;
    if (pts.col(parent).z() <= 0 || pts.col(p).z() <= 0) continue;
    const auto a = project(cam, pts.col(parent));
    const auto b = project(cam, pts.col(p));
    draw_line(img, cam.width, cam.height, a.u, a.v, b.u, b.v, value);
  }
}

int cmd_render(const SkeletonModel& skel, const std::string& data_dir,
               int frame_id, const std::string& out_path,
               const std::string& poses_path, bool with_truth) {
  const DatasetManifest manifest = read_manifest(data_dir);
  if (frame_id < 0 || frame_id >= manifest.n_frames)
    throw CLI::ValidationError("frame " + std::to_string(frame_id) +
                               " out of range [0," +
                               std::to_string(manifest.n_frames) + ")");
  const DepthImage depth =
      read_dpt(data_dir + "/" + manifest.files[frame_id]);
  const CameraModel& cam = manifest.camera;

  // Foreground depths map to [64,255] (near is bright); background stays 0.
  float lo = kBackgroundDepth, hi = 0;
  for (float d : depth.data())
    if (d < kBackgroundDepth) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  std::vector<unsigned char> img(size_t(cam.width) * cam.height, 0);
  const bool empty = !(hi > 0);
  if (!empty) {
    const float span = std::max(hi - lo, 1e-6f);
    for (size_t i = 0; i < img.size(); ++i) {
      const float d = depth.data()[i];
      if (d < kBackgroundDepth)
        img[i] = (unsigned char)(255 - int(191.0f * (d - lo) / span));
    }
    if (with_truth) {
      const std::string poses_json = data_dir + "/poses.json";
      if (std::filesystem::exists(poses_json))
        for (const auto& [id, q] : read_poses_json(poses_json))
          if (id == frame_id) overlay_skeleton(img, cam, skel, q, 160);
    }
    if (!poses_path.empty())
      for (const auto& [id, q] : read_poses_json(poses_path))
        if (id == frame_id) overlay_skeleton(img, cam, skel, q, 255);
  } else {
    std::cerr << "warning: frame " << frame_id
              << " is all background; no overlay drawn\n";
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "P5\n" << cam.width << ' ' << cam.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()),
            std::streamsize(img.size()));
  std::cout << "image: " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascaded 3D full-body pose regression from depth images"};
  app.require_subcommand(1);

  std::string config_path, skeleton_path;
  app.add_option("--config", config_path, "RunConfig JSON path");
  app.add_option("--skeleton", skeleton_path,
                 "skeleton config JSON (default: built-in)");
  std::uint64_t seed_val = 0;
  int workers_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "override config seed");
  auto* workers_opt =
      app.add_option("--workers", workers_val,
                     "worker threads (never changes output bytes)")
          ->check(CLI::PositiveNumber);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out;
  int synth_frames = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--frames", synth_frames, "number of frames")
      ->required()
      ->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "train a cascade model");
  std::string train_data, train_out, train_export;
  int opt_trees = 0, opt_depth = 0;
  std::vector<int> opt_stages;
  double opt_offset_mm = 0;
  std::string opt_objective;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--out", train_out, "output model file")->required();
  train->add_option("--export-json", train_export, "debug JSON dump path");
  auto* trees_opt = train->add_option("--trees", opt_trees, "trees per stage")
                        ->check(CLI::PositiveNumber);
  auto* depth_opt = train->add_option("--depth", opt_depth, "tree depth")
                        ->check(CLI::PositiveNumber);
  auto* stages_opt = train->add_option("--stages", opt_stages,
                                       "root,torso,limb stage counts")
                         ->delimiter(',')
                         ->expected(3);
  auto* offset_opt =
      train->add_option("--probe-offset-mm", opt_offset_mm,
                        "maximum probe offset (limb radius), millimeters")
          ->check(CLI::PositiveNumber);
  auto* objective_opt = train->add_option(
      "--objective", opt_objective, "gradient | euler_delta | position");

  auto* infer_cmd = app.add_subcommand("infer", "estimate poses for a dataset");
  std::string infer_model, infer_data, infer_out;
  infer_cmd->add_option("--model", infer_model, "model file")->required();
  infer_cmd->add_option("--data", infer_data, "dataset directory")->required();
  infer_cmd->add_option("--out", infer_out, "output poses JSON")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model or poses file");
  std::string eval_model, eval_poses, eval_data, eval_out, eval_csv;
  eval_cmd->add_option("--model", eval_model, "model file");
  eval_cmd->add_option("--poses", eval_poses,
                       "pre-computed estimates (poses.json format)");
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "output report JSON")->required();
  eval_cmd->add_option("--curve-csv", eval_csv,
                       "accuracy curve CSV (threshold,fraction)");

  auto* bench_cmd = app.add_subcommand("bench", "single-thread throughput");
  std::string bench_model, bench_data;
  int bench_reps = 1;
  bench_cmd->add_option("--model", bench_model, "model file")->required();
  bench_cmd->add_option("--data", bench_data, "dataset directory")->required();
  bench_cmd->add_option("--reps", bench_reps, "repetitions")
      ->check(CLI::PositiveNumber);

  auto* render_cmd =
      app.add_subcommand("render", "depth frame + skeleton overlay as PGM");
  std::string render_data, render_out, render_poses;
  int render_frame = 0;
  bool render_truth = false;
  render_cmd->add_option("--data", render_data, "dataset directory")
      ->required();
  render_cmd->add_option("--frame", render_frame, "frame index")->required();
  render_cmd->add_option("--out", render_out, "output PGM path")->required();
  render_cmd->add_option("--poses", render_poses, "estimates to overlay");
  render_cmd->add_flag("--truth", render_truth, "overlay ground truth");

  try {
    app.parse(argc, argv);

    RunConfig config =
        config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
    if (*seed_opt) config.seed = seed_val;
    if (*workers_opt) config.workers = workers_val;
    if (*trees_opt) config.cascade.forest.n_trees = opt_trees;
    if (*depth_opt) config.cascade.forest.max_depth = opt_depth;
    if (*stages_opt) {
      if (opt_stages[0] < 0 || opt_stages[1] < 0 || opt_stages[2] < 0)
        throw CLI::ValidationError("--stages counts must be >= 0");
      config.cascade.stages = {opt_stages[0], opt_stages[1], opt_stages[2]};
    }
    if (*offset_opt) config.cascade.probe_offset_m = opt_offset_mm / 1000.0;
    if (*objective_opt)
      config.cascade.objective = objective_from_name(opt_objective);
    const SkeletonModel skel = resolve_skeleton(skeleton_path);

    if (*synth) return cmd_synth(config, skel, synth_out, synth_frames);
    if (*train)
      return cmd_train(config, skel, train_data, train_out, train_export);
    if (*infer_cmd)
      return cmd_infer(config, skel, infer_model, infer_data, infer_out);
    if (*eval_cmd) {
      if (eval_model.empty() == eval_poses.empty())
        throw CLI::ValidationError(
            "eval needs exactly one of --model or --poses");
      return cmd_eval(config, skel, eval_model, eval_poses, eval_data,
                      eval_out, eval_csv);
    }
    if (*bench_cmd) return cmd_bench(skel, bench_model, bench_data, bench_reps);
    if (*render_cmd)
      return cmd_render(skel, render_data, render_frame, render_out,
                        render_poses, render_truth);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
