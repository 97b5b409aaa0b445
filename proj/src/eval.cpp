#include "kinpose/eval.hpp"

#include <chrono>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kinpose/parallel.hpp"

namespace kinpose {

std::vector<double> default_thresholds_cm() {
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 20};
}

VecX per_joint_rmse_cm(const std::vector<Mat3X>& estimates,
                       const std::vector<Mat3X>& truths) {
  if (estimates.empty() || estimates.size() != truths.size())
    throw std::invalid_argument("per_joint_rmse: empty or mismatched sets");
  const Eigen::Index np = estimates[0].cols();
  VecX sumsq = VecX::Zero(np);
  for (size_t i = 0; i < estimates.size(); ++i)
    sumsq += (estimates[i] - truths[i]).colwise().squaredNorm().transpose();
  return (sumsq / double(estimates.size())).cwiseSqrt() * 100.0;
}

std::vector<double> accuracy_curve(const std::vector<double>& frame_errors,
                                   const std::vector<double>& thresholds) {
  if (frame_errors.empty())
    throw std::invalid_argument("accuracy_curve: empty error set");
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double d : thresholds) {
    int within = 0;
    for (double e : frame_errors)
      if (e <= d) ++within;
    out.push_back(double(within) / double(frame_errors.size()));
  }
  return out;
}

VecX bone_length_error_cm(const std::vector<Mat3X>& positions,
                          const SkeletonModel& skel) {
  const int np = skel.point_count();
  VecX acc = VecX::Zero(np - 1);  // segments end at points 1..np-1
  for (const auto& pts : positions) {
    for (int p = 1; p < np; ++p) {
      const int parent = skel.is_end_site(p)
                             ? skel.point_owner_joint(p)
                             : skel.joints()[p].parent;
      const double len = (pts.col(p) - pts.col(parent)).norm();
      acc[p - 1] += std::abs(len - skel.bone_length(p));
    }
  }
  return acc / double(positions.size()) * 100.0;
}

EvalReport evaluate_positions(const std::vector<Mat3X>& estimates,
                              const std::vector<Mat3X>& truths,
                              const SkeletonModel& skel,
                              const std::vector<double>& thresholds_cm) {
  EvalReport report;
  report.frames = int(estimates.size());
  for (int p = 0; p < skel.point_count(); ++p)
    report.point_names.push_back(skel.point_name(p));
  report.per_joint_rmse_cm = per_joint_rmse_cm(estimates, truths);
  report.mean_rmse_cm = report.per_joint_rmse_cm.mean();
  report.per_frame_mean_err_cm.reserve(estimates.size());
  for (size_t i = 0; i < estimates.size(); ++i)
    report.per_frame_mean_err_cm.push_back(
        (estimates[i] - truths[i]).colwise().norm().mean() * 100.0);
  report.thresholds_cm = thresholds_cm;
  report.curve_fraction =
      accuracy_curve(report.per_frame_mean_err_cm, thresholds_cm);
  report.bone_err_per_segment_cm = bone_length_error_cm(estimates, skel);
  report.bone_err_mean_cm = report.bone_err_per_segment_cm.mean();
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["frames"] = frames;
  j["model_id"] = model_id;
  j["config_id"] = config_id;
  j["point_names"] = point_names;
  nlohmann::json rmse = nlohmann::json::array();
  for (Eigen::Index i = 0; i < per_joint_rmse_cm.size(); ++i)
    rmse.push_back(per_joint_rmse_cm[i]);
  j["per_joint_rmse_cm"] = std::move(rmse);
  j["mean_rmse_cm"] = mean_rmse_cm;
  j["accuracy_curve"] = {{"thresholds_cm", thresholds_cm},
                         {"fraction_within", curve_fraction}};
  nlohmann::json bone = nlohmann::json::array();
  for (Eigen::Index i = 0; i < bone_err_per_segment_cm.size(); ++i)
    bone.push_back(bone_err_per_segment_cm[i]);
  j["bone_length_error_cm"] = {{"per_segment", std::move(bone)},
                               {"mean", bone_err_mean_cm}};
  return j;
}

std::string EvalReport::curve_csv() const {
  std::ostringstream out;
  out << "threshold_cm,fraction_within\n";
  for (size_t i = 0; i < thresholds_cm.size(); ++i)
    out << thresholds_cm[i] << ',' << curve_fraction[i] << '\n';
  return out.str();
}

std::vector<Mat3X> run_inference_points(const ModelFile& model,
                                        const std::vector<Frame>& frames,
                                        const SkeletonModel& skel,
                                        const CameraModel& cam, int workers) {
  std::vector<Mat3X> out(frames.size());
  if (model.objective == ObjectiveKind::kPosition) {
    parallel_for(int(frames.size()), workers, [&](int i) {
      out[i] = infer_positions(model.position, frames[i].image, cam, skel);
    });
  } else {
    parallel_for(int(frames.size()), workers, [&](int i) {
      out[i] = forward_kinematics(
          skel, infer(model.cascade, frames[i].image, cam, skel));
    });
  }
  return out;
}

EvalReport evaluate_model(const ModelFile& model,
                          const std::vector<Frame>& frames,
                          const SkeletonModel& skel, const CameraModel& cam,
                          int workers, std::vector<double> thresholds_cm) {
  if (frames.empty())
    throw std::invalid_argument("evaluate_model: empty frame set");
  if (thresholds_cm.empty()) thresholds_cm = default_thresholds_cm();
  std::vector<Mat3X> truths(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    if (!frames[i].truth)
      throw std::invalid_argument("evaluate_model: frame without truth");
    truths[i] = forward_kinematics(skel, *frames[i].truth);
  }
  const std::vector<Mat3X> estimates =
      run_inference_points(model, frames, skel, cam, workers);
  EvalReport report =
      evaluate_positions(estimates, truths, skel, thresholds_cm);
  report.model_id = objective_name(model.objective);
  return report;
}

double initial_pose_error_cm(const std::vector<Frame>& frames,
                             const SkeletonModel& skel, const CameraModel& cam,
                             double bandwidth_m, int workers) {
  std::vector<double> err(frames.size());
  parallel_for(int(frames.size()), workers, [&](int i) {
    const Pose q0 =
        initial_pose(frames[i].image, cam, skel, skel.a_pose(), bandwidth_m);
    const Mat3X est = forward_kinematics(skel, q0);
    const Mat3X truth = forward_kinematics(skel, *frames[i].truth);
    err[i] = (est - truth).colwise().norm().mean() * 100.0;
  });
  double sum = 0;
  for (double e : err) sum += e;
  return sum / double(err.size());
}

// ---------------------------------------------------------------------------
// sweeps

SweepSpec SweepSpec::default_for(SweepAxis axis) {
  SweepSpec spec;
  spec.axis = axis;
  switch (axis) {
    case SweepAxis::kTreeDepth: spec.values = {5, 10, 15, 20}; break;
    case SweepAxis::kTreeCount: spec.values = {1, 8, 16, 24}; break;
    case SweepAxis::kProbeOffsetMm:
      spec.values = {50, 80, 100, 120, 150, 200, 1000};
      break;
    case SweepAxis::kStageCounts:
      spec.stage_counts = {{2, 4, 2}, {3, 6, 3}, {5, 10, 5}, {7, 14, 7}};
      break;
  }
  return spec;
}

SweepOutcome run_sweep(const std::vector<Frame>& train_frames,
                       const std::vector<Frame>& test_frames,
                       const SkeletonModel& skel, const CameraModel& cam,
                       const CascadeConfig& base, const SweepSpec& spec,
                       std::uint64_t seed, int workers) {
  SweepOutcome out;
  auto run_one = [&](const CascadeConfig& config, const std::string& label) {
    TrainResult trained =
        train_cascade(train_frames, skel, cam, config, seed, workers);
    ModelFile file;
    file.objective = config.objective;
    file.cascade = std::move(trained.model);
    EvalReport report = evaluate_model(file, test_frames, skel, cam, workers);
    report.config_id = label;
    out.labels.push_back(label);
    out.reports.push_back(std::move(report));
    out.traces.push_back(std::move(trained.trace));
  };

  if (spec.axis == SweepAxis::kStageCounts) {
    for (const auto& counts : spec.stage_counts) {
      CascadeConfig config = base;
      config.stages = counts;
      run_one(config, "stages=" + std::to_string(counts.root) + "/" +
                          std::to_string(counts.torso) + "/" +
                          std::to_string(counts.limb));
    }
    return out;
  }
  for (double value : spec.values) {
    CascadeConfig config = base;
    std::string label;
    switch (spec.axis) {
      case SweepAxis::kTreeDepth:
        config.forest.max_depth = int(value);
        label = "depth=" + std::to_string(int(value));
        break;
      case SweepAxis::kTreeCount:
        config.forest.n_trees = int(value);
        label = "trees=" + std::to_string(int(value));
        break;
      case SweepAxis::kProbeOffsetMm:
        config.probe_offset_m = value / 1000.0;
        label = "offset_mm=" + std::to_string(int(value));
        break;
      case SweepAxis::kStageCounts: break;  // handled above
    }
    run_one(config, label);
  }
  return out;
}

ObjectiveComparison compare_objectives(const std::vector<Frame>& train_frames,
                                       const std::vector<Frame>& test_frames,
                                       const SkeletonModel& skel,
                                       const CameraModel& cam,
                                       const CascadeConfig& base,
                                       std::uint64_t seed, int workers) {
  const std::vector<double> thresholds = default_thresholds_cm();
  ObjectiveComparison out;

  auto eval_kinematic = [&](ObjectiveKind kind, TrainTrace* trace) {
    CascadeConfig config = base;
    config.objective = kind;
    TrainResult trained =
        train_cascade(train_frames, skel, cam, config, seed, workers);
    *trace = std::move(trained.trace);
    ModelFile file;
    file.objective = kind;
    file.cascade = std::move(trained.model);
    EvalReport report =
        evaluate_model(file, test_frames, skel, cam, workers, thresholds);
    report.model_id = objective_name(kind);
    return report;
  };
  out.gradient = eval_kinematic(ObjectiveKind::kGradient, &out.gradient_trace);
  out.euler_delta =
      eval_kinematic(ObjectiveKind::kEulerDelta, &out.euler_trace);

  CascadeConfig config = base;
  config.objective = ObjectiveKind::kPosition;
  PositionTrainResult trained =
      train_position_cascade(train_frames, skel, cam, config, seed, workers);
  out.position_trace = std::move(trained.trace);
  ModelFile file;
  file.objective = ObjectiveKind::kPosition;
  file.position = std::move(trained.model);
  out.position =
      evaluate_model(file, test_frames, skel, cam, workers, thresholds);
  out.position.model_id = "position";
  return out;
}

// ---------------------------------------------------------------------------
// benchmark

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::uint64_t forest_feature_bound(const Forest& f) {
  return std::uint64_t(f.trees.size()) * std::uint64_t(f.max_depth);
}

}  // namespace

BenchReport benchmark(const ModelFile& model, const std::vector<Frame>& frames,
                      const SkeletonModel& skel, const CameraModel& cam,
                      int reps, const std::function<double()>& clock) {
  if (frames.empty())
    throw std::invalid_argument("benchmark: empty frame set");
  const auto read_clock = clock ? clock : steady_seconds;
  BenchReport report;
  report.frames = int(frames.size());
  report.reps = std::max(1, reps);

  auto run_frame = [&](const Frame& f) {
    if (model.objective == ObjectiveKind::kPosition)
      infer_positions(model.position, f.image, cam, skel);
    else
      infer(model.cascade, f.image, cam, skel);
  };

  // Warmup, excluded from timing.
  for (int i = 0; i < std::min<int>(3, int(frames.size())); ++i)
    run_frame(frames[i]);

  const double t0 = read_clock();
  for (int rep = 0; rep < report.reps; ++rep)
    for (const auto& f : frames) run_frame(f);
  const double t1 = read_clock();
  report.seconds = t1 - t0;
  report.fps = double(report.frames) * report.reps /
               std::max(report.seconds, 1e-12);

  // Feature-count instrumentation and per-section breakdown on a bounded
  // instrumented pass (always steady-clock).
  if (model.objective != ObjectiveKind::kPosition) {
    for (const auto& s : model.cascade.stages)
      report.feature_bound += forest_feature_bound(s.forest);
  } else {
    for (const auto& s : model.position.stages)
      report.feature_bound += forest_feature_bound(s.forest);
  }
  const int n_instr = std::min<int>(int(frames.size()), 50);
  double total_features = 0;
  std::string first_section;
  for (int i = 0; i < n_instr; ++i) {
    FeatureEvalStats stats;
    if (model.objective == ObjectiveKind::kPosition) {
      infer_positions(model.position, frames[i].image, cam, skel, &stats);
    } else {
      const double a0 = steady_seconds();
      initial_pose(frames[i].image, cam, skel, model.cascade);
      report.init_seconds_per_frame += steady_seconds() - a0;

      double last = steady_seconds();
      bool first = true;
      infer_hooked(model.cascade, frames[i].image, cam, skel, nullptr, &stats,
                   [&](const StageModel& stage) {
                     const double now = steady_seconds();
                     if (first) {
                       first_section = section_name(stage.section);
                       first = false;
                     }
                     report.section_seconds[section_name(stage.section)] +=
                         now - last;
                     last = now;
                   });
    }
    total_features += double(stats.features);
    report.max_features_per_frame =
        std::max(report.max_features_per_frame, stats.features);
  }
  report.mean_features_per_frame = total_features / double(n_instr);
  report.init_seconds_per_frame /= double(n_instr);
  for (auto& [_, secs] : report.section_seconds) secs /= double(n_instr);
  // The interval up to the first callback spans initialization plus the
  // first stage; reassign the init share measured above.
  if (!first_section.empty()) {
    auto it = report.section_seconds.find(first_section);
    if (it != report.section_seconds.end())
      it->second = std::max(0.0, it->second - report.init_seconds_per_frame);
  }
  return report;
}

}  // namespace kinpose
