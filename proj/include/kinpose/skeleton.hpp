#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kinpose/types.hpp"

namespace kinpose {

enum class DofKind { kTx, kTy, kTz, kRx, kRy, kRz };

inline bool is_translation(DofKind k) {
  return k == DofKind::kTx || k == DofKind::kTy || k == DofKind::kTz;
}

struct JointSpec {
  std::string name;
  int parent = -1;   // -1 for the root only
  Vec3 offset;       // meters, in the parent's frame
  double radius = 0; // capsule radius of the segment parent->joint
};

struct DofSpec {
  int joint = 0;
  DofKind kind = DofKind::kRx;
  double lower = 0, upper = 0; // radians, or meters for root translation
};

struct EndSiteSpec {
  std::string name;
  int joint = 0;
  Vec3 offset;
  double radius = 0;
};

// The fixed body prior: joint hierarchy, per-dof axes and limits, bone
// lengths and capsule radii. Immutable after construction; safe to share
// across worker threads.
class SkeletonModel {
 public:
  SkeletonModel(std::vector<JointSpec> joints, std::vector<DofSpec> dofs,
                std::vector<EndSiteSpec> end_sites, Pose a_pose);

  // Built-in 16-joint / 38-dof human skeleton with adult proportions.
  static SkeletonModel default_model();

  static SkeletonModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  // FNV-1a over the canonical serialization; recorded in dataset manifests
  // and model files so mismatched configs fail loudly.
  std::string hash() const;

  int joint_count() const { return int(joints_.size()); }
  int end_site_count() const { return int(end_sites_.size()); }
  // Joints followed by end sites; these are the rows of every RMSE table.
  int point_count() const { return joint_count() + end_site_count(); }

  const std::vector<JointSpec>& joints() const { return joints_; }
  const std::vector<DofSpec>& dofs() const { return dofs_; }
  const std::vector<EndSiteSpec>& end_sites() const { return end_sites_; }
  const Pose& a_pose() const { return a_pose_; }

  // Rotation dof indices of a joint, in application order. Root rotation
  // dofs exclude the three translations.
  const std::vector<int>& joint_rotation_dofs(int joint) const {
    return joint_rot_dofs_[joint];
  }

  int find_joint(const std::string& name) const;  // -1 if absent

  // point = joint index, or joint_count()+k for end site k.
  bool is_end_site(int point) const { return point >= joint_count(); }
  int point_owner_joint(int point) const;
  const std::string& point_name(int point) const;
  // Length of the segment ending at `point` (0 for the root).
  double bone_length(int point) const;
  double segment_radius(int point) const;

  bool rotations_in_limits(const Pose& q, double tol = 1e-9) const;
  // Offset from the root to the mean of all body points under the A-pose
  // with the root at the origin; used by pose initialization.
  Vec3 a_pose_centroid_offset() const;

 private:
  void validate() const;

  std::vector<JointSpec> joints_;
  std::vector<DofSpec> dofs_;
  std::vector<EndSiteSpec> end_sites_;
  Pose a_pose_;
  std::vector<std::vector<int>> joint_rot_dofs_;
};

// Forward-kinematics output for one pose: world positions of all points
// (3 x point_count) and per-joint world rotations.
struct FkResult {
  Mat3X positions;
  std::vector<Mat3> rotations;
  // World axis of every rotational dof and the world pivot of its joint,
  // kept so the Jacobian assembly does not redo the chain walk.
  std::vector<Vec3> dof_axis;
};

FkResult fk_full(const SkeletonModel& skel, const Pose& q);
Mat3X forward_kinematics(const SkeletonModel& skel, const Pose& q);
std::vector<Mat3> world_rotations(const SkeletonModel& skel, const Pose& q);

// Analytic Jacobian of the stacked point positions w.r.t. q,
// shape (3*point_count) x 38. Rotational columns are axis x lever-arm.
MatX pose_jacobian(const SkeletonModel& skel, const Pose& q);
MatX pose_jacobian(const SkeletonModel& skel, const FkResult& fk);

// Returns base with q[subset[i]] += delta[i]; other entries untouched.
// Throws std::out_of_range on a bad index.
Pose apply_dof_subset(const Pose& base, const VecX& delta,
                      const std::vector<int>& subset);

}  // namespace kinpose
