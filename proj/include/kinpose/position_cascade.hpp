#pragma once

#include <cstdint>
#include <vector>

#include "kinpose/cascade.hpp"

namespace kinpose {

// Kinematics-free baseline: the state is the 21-point position set, updated
// additively per stage with position-indexed features (probe offsets attach
// to current point estimates in the camera frame, no rotation). Nothing
// constrains bone lengths.
struct PositionStageModel {
  Section section = Section::kRoot;
  std::vector<int> point_subset;
  std::vector<FeatureDescriptor> descriptors;
  Forest forest;
  double beta = 0;
};

struct PositionCascadeModel {
  std::string skeleton_hash;
  Pose initial_pose = Pose::Zero();  // A-pose, shapes the initial point set
  StageCounts stage_counts;
  double meanshift_bandwidth_m = 0.5;
  std::vector<PositionStageModel> stages;
};

struct PositionTrainResult {
  PositionCascadeModel model;
  TrainTrace trace;
  std::vector<Mat3X> final_train_positions;
};

// Same hierarchy, budgets and line search as the gradient cascade; only the
// state space and targets differ. Root and torso stages update all points,
// limb stages update the points their limb coordinates would move.
PositionTrainResult train_position_cascade(const std::vector<Frame>& frames,
                                           const SkeletonModel& skel,
                                           const CameraModel& cam,
                                           const CascadeConfig& config,
                                           std::uint64_t seed,
                                           int workers = 1);

Mat3X infer_positions(const PositionCascadeModel& model, const DepthImage& img,
                      const CameraModel& cam, const SkeletonModel& skel,
                      FeatureEvalStats* stats = nullptr);

}  // namespace kinpose
