#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kinpose/model_io.hpp"

namespace kinpose {

// Per-joint RMSE table, accuracy curve and bone-length statistics over a
// frame set; the unit of comparison across models and sweeps.
struct EvalReport {
  int frames = 0;
  std::string model_id;
  std::string config_id;
  std::vector<std::string> point_names;
  VecX per_joint_rmse_cm;               // one column per body point
  double mean_rmse_cm = 0;              // mean over columns
  std::vector<double> thresholds_cm;
  std::vector<double> curve_fraction;   // fraction of frames with mean
                                        // per-joint error <= threshold
  VecX bone_err_per_segment_cm;         // segments in point order (1..)
  double bone_err_mean_cm = 0;
  std::vector<double> per_frame_mean_err_cm;

  nlohmann::json to_json() const;
  std::string curve_csv() const;  // "threshold_cm,fraction" lines
};

std::vector<double> default_thresholds_cm();

// RMSE in cm per body point: sqrt of the mean squared point error over
// frames. Throws on an empty or mismatched set.
VecX per_joint_rmse_cm(const std::vector<Mat3X>& estimates,
                       const std::vector<Mat3X>& truths);

// Fraction of frames whose mean per-point error is <= D, per threshold.
std::vector<double> accuracy_curve(const std::vector<double>& frame_errors,
                                   const std::vector<double>& thresholds);

// Mean |segment length - configured bone length| per segment, cm.
VecX bone_length_error_cm(const std::vector<Mat3X>& positions,
                          const SkeletonModel& skel);

EvalReport evaluate_positions(const std::vector<Mat3X>& estimates,
                              const std::vector<Mat3X>& truths,
                              const SkeletonModel& skel,
                              const std::vector<double>& thresholds_cm);

// Runs a model over frames (order-fixed parallel fan-out) and returns the
// estimated body points; kinematic models go through FK, the position
// baseline returns its point set directly.
std::vector<Mat3X> run_inference_points(const ModelFile& model,
                                        const std::vector<Frame>& frames,
                                        const SkeletonModel& skel,
                                        const CameraModel& cam,
                                        int workers = 1);

EvalReport evaluate_model(const ModelFile& model,
                          const std::vector<Frame>& frames,
                          const SkeletonModel& skel, const CameraModel& cam,
                          int workers = 1,
                          std::vector<double> thresholds_cm = {});

// Mean per-joint error (cm) of the A-pose initialization itself; the
// baseline a trained cascade is judged against.
double initial_pose_error_cm(const std::vector<Frame>& frames,
                             const SkeletonModel& skel, const CameraModel& cam,
                             double bandwidth_m, int workers = 1);

// ---------------------------------------------------------------------------
// hyper-parameter sweep harness

enum class SweepAxis { kTreeDepth, kTreeCount, kStageCounts, kProbeOffsetMm };

struct SweepSpec {
  SweepAxis axis = SweepAxis::kTreeDepth;
  std::vector<double> values;             // depth / tree count / offset mm
  std::vector<StageCounts> stage_counts;  // for kStageCounts only

  // The grids of the experiments section: depths 5/10/15/20, tree counts
  // 1/8/16/24, probe offsets 50..1000 mm.
  static SweepSpec default_for(SweepAxis axis);
};

struct SweepOutcome {
  std::vector<std::string> labels;
  std::vector<EvalReport> reports;
  std::vector<TrainTrace> traces;
};

SweepOutcome run_sweep(const std::vector<Frame>& train_frames,
                       const std::vector<Frame>& test_frames,
                       const SkeletonModel& skel, const CameraModel& cam,
                       const CascadeConfig& base, const SweepSpec& spec,
                       std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// regression-objective comparison

struct ObjectiveComparison {
  EvalReport gradient;
  EvalReport euler_delta;
  EvalReport position;
  TrainTrace gradient_trace;
  TrainTrace euler_trace;
  TrainTrace position_trace;
};

// Trains the three regression objectives under identical budgets and
// evaluates them on the same frames and thresholds.
ObjectiveComparison compare_objectives(const std::vector<Frame>& train_frames,
                                       const std::vector<Frame>& test_frames,
                                       const SkeletonModel& skel,
                                       const CameraModel& cam,
                                       const CascadeConfig& base,
                                       std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// throughput benchmark

struct BenchReport {
  int frames = 0;
  int reps = 0;
  double seconds = 0;
  double fps = 0;
  double init_seconds_per_frame = 0;           // mean-shift + A-pose placement
  std::map<std::string, double> section_seconds;  // per inference pass
  double mean_features_per_frame = 0;
  std::uint64_t max_features_per_frame = 0;
  std::uint64_t feature_bound = 0;  // sum over stages of n_trees * max_depth
};

// Wall-clock over single-threaded inference, warmup excluded. The optional
// clock (seconds, monotonic) is read once before and once after the timed
// loop; the per-section breakdown always uses the steady clock.
BenchReport benchmark(const ModelFile& model, const std::vector<Frame>& frames,
                      const SkeletonModel& skel, const CameraModel& cam,
                      int reps = 1,
                      const std::function<double()>& clock = {});

}  // namespace kinpose
