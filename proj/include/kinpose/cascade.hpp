#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kinpose/camera.hpp"
#include "kinpose/dataset.hpp"
#include "kinpose/depth_image.hpp"
#include "kinpose/features.hpp"
#include "kinpose/forest.hpp"
#include "kinpose/sections.hpp"
#include "kinpose/skeleton.hpp"

namespace kinpose {

// Regression target flavor. The pose-gradient objective is the primary
// method; euler_delta regresses pose residuals directly; position is the
// kinematics-free baseline handled by position_cascade.hpp.
enum class ObjectiveKind { kGradient, kEulerDelta, kPosition };

const char* objective_name(ObjectiveKind k);
ObjectiveKind objective_from_name(const std::string& name);

struct StageCounts {
  int root = 5;
  int torso = 10;
  int limb = 5;  // per limb chain
};

struct CascadeConfig {
  StageCounts stages;
  ForestTrainParams forest;
  double probe_offset_m = 0.100;  // limb criterion radius dr_l
  int descriptors_per_stage = 500;
  double beta_max = 4.0;
  double line_search_tol = 1e-3;
  double meanshift_bandwidth_m = 0.5;
  ObjectiveKind objective = ObjectiveKind::kGradient;
};

// One boosting stage: which coordinates it moves, its probe table, the
// forest approximating the regression target, and the learned step size.
struct StageModel {
  Section section = Section::kRoot;
  std::vector<int> dof_subset;
  std::vector<FeatureDescriptor> descriptors;
  Forest forest;
  double beta = 0;
};

struct CascadeModel {
  std::string skeleton_hash;
  Pose canonical_pose = Pose::Zero();  // feature-frame reference pose
  Pose initial_pose = Pose::Zero();    // the A-pose used as q0
  StageCounts stage_counts;
  ObjectiveKind objective = ObjectiveKind::kGradient;
  double meanshift_bandwidth_m = 0.5;
  // Ordered root stages, torso stages, then the four limb chains.
  std::vector<StageModel> stages;
};

// Sum over samples of the squared distance between estimated and
// ground-truth body points.
double pose_loss(const SkeletonModel& skel, const std::vector<Pose>& poses,
                 const std::vector<Pose>& truths);

// Negative loss gradient restricted to the subset's coordinates:
// -J(q)^T (points(q) - points(q*)) taken row-wise on dof_subset. (The
// Jacobian enters transposed; beta absorbs the factor of 2.)
VecX regression_target(const SkeletonModel& skel, const Pose& current,
                       const Pose& truth, const std::vector<int>& dof_subset);

// Golden-section minimizer over [0, beta_max]; beta = 0 is always
// evaluated, so the returned loss never exceeds the no-step loss.
struct LineSearchResult {
  double beta = 0;
  double loss = 0;
};
LineSearchResult golden_section_min(const std::function<double(double)>& f,
                                    double beta_max, double tol);

// Optimal shared step size along per-sample directions g: minimizes the
// summed point loss of q_i + beta * g_i over the dof subset.
LineSearchResult stage_line_search(const SkeletonModel& skel,
                                   const std::vector<Pose>& poses,
                                   const std::vector<VecX>& gradients,
                                   const std::vector<Pose>& truths,
                                   const std::vector<int>& dof_subset,
                                   double beta_max = 4.0, double tol = 1e-3,
                                   int workers = 1);

// A-pose with the root placed at the mean-shift mode of the foreground
// cloud, shifted by the A-pose body-centroid offset. Throws on an empty
// foreground.
Pose initial_pose(const DepthImage& img, const CameraModel& cam,
                  const SkeletonModel& skel, const Pose& a_pose,
                  double bandwidth_m);
Pose initial_pose(const DepthImage& img, const CameraModel& cam,
                  const SkeletonModel& skel, const CascadeModel& model);

struct StageTraceEntry {
  Section section = Section::kRoot;
  int stage = 0;        // h within the section, 0-based
  double beta = 0;
  double loss_after = 0;       // full point loss across training samples
  double section_err_m = 0;    // mean per-point error over reported points
};

struct TrainTrace {
  double initial_loss = 0;
  std::vector<StageTraceEntry> entries;
};

struct TrainResult {
  CascadeModel model;
  TrainTrace trace;
  std::vector<Pose> final_train_poses;
};

// Offline training of the hierarchical cascade: per section and stage,
// fit a forest to the stage targets, learn the step size by line search,
// update every sample's pose; torso coordinates re-initialize to canonical
// values after the root section, and the four limb chains run independently
// from the post-torso poses and merge. Requires ground truth on all frames.
TrainResult train_cascade(const std::vector<Frame>& frames,
                          const SkeletonModel& skel, const CameraModel& cam,
                          const CascadeConfig& config, std::uint64_t seed,
                          int workers = 1);

// Single-pass online inference (Alg.-2-style replay of the update
// sequence). Throws on an empty foreground.
Pose infer(const CascadeModel& model, const DepthImage& img,
           const CameraModel& cam, const SkeletonModel& skel,
           FeatureEvalStats* stats = nullptr);

// Same, recording the pose after initialization and after every stage.
Pose infer_with_trace(const CascadeModel& model, const DepthImage& img,
                      const CameraModel& cam, const SkeletonModel& skel,
                      std::vector<Pose>* stage_poses,
                      FeatureEvalStats* stats = nullptr);

// Full-featured variant with a hook invoked after each stage applies;
// instrumentation only, the update sequence is identical to infer().
Pose infer_hooked(const CascadeModel& model, const DepthImage& img,
                  const CameraModel& cam, const SkeletonModel& skel,
                  std::vector<Pose>* stage_poses, FeatureEvalStats* stats,
                  const std::function<void(const StageModel&)>& after_stage);

}  // namespace kinpose
