#pragma once

#include <string>
#include <vector>

#include "kinpose/skeleton.hpp"

namespace kinpose {

// Hierarchy sections of the cascade, in training/testing order:
// root pose -> torso pose -> the four limbs (independent of one another).
enum class Section { kRoot, kTorso, kLeftArm, kRightArm, kLeftLeg, kRightLeg };

inline constexpr Section kAllSections[] = {
    Section::kRoot,    Section::kTorso,   Section::kLeftArm,
    Section::kRightArm, Section::kLeftLeg, Section::kRightLeg};

const char* section_name(Section s);
Section section_from_name(const std::string& name);
bool is_limb(Section s);

// Sampling-radius classes of Eq.-style adaptive feature radii: the torso
// and root classes scale relative to the limb criterion radius.
enum class RadiusClass { kRoot, kTorso, kLimb };
RadiusClass section_radius_class(Section s);

// Per-section policy tables resolved against a skeleton by joint name.
// The pose-coordinate layout is fixed (38 dofs over the canonical joint
// set), so resolution fails loudly on a skeleton with foreign naming.
class SectionPolicy {
 public:
  explicit SectionPolicy(const SkeletonModel& skel);

  // Pose coordinates regressed by the section. The torso subset includes
  // the root (refined) plus the humerus/femur dofs it shares with limbs.
  const std::vector<int>& dof_subset(Section s) const;

  // Points (joints + end sites) feature probes may attach to.
  const std::vector<int>& point_pool(Section s) const;

  // Points whose positions a position-objective stage updates. Disjoint
  // across sections; union covers all points.
  const std::vector<int>& position_subset(Section s) const;

  // Segments (identified by child point) whose mean length*radius feeds the
  // adaptive-radius ratio for the class.
  const std::vector<int>& segment_group(RadiusClass c) const;

 private:
  std::vector<int> dof_subset_[6];
  std::vector<int> point_pool_[6];
  std::vector<int> position_subset_[6];
  std::vector<int> segment_group_[3];
};

}  // namespace kinpose
