#pragma once

#include <cstdint>
#include <vector>

#include "kinpose/camera.hpp"
#include "kinpose/depth_image.hpp"
#include "kinpose/rng.hpp"
#include "kinpose/sections.hpp"
#include "kinpose/skeleton.hpp"

namespace kinpose {

// A pose-indexed depth-difference probe. Offsets are expressed in the
// owning point's joint-local frame under the canonical pose, so the probe
// stays rigidly attached to the body part as the pose changes.
struct FeatureDescriptor {
  int point_i = 0, point_j = 0;  // joint or end-site index
  Vec3 dp1, dp2;                 // meters, joint-local

  bool is_unary() const { return point_i == point_j; }
};

struct SamplingSpec {
  std::vector<int> point_pool;  // probe anchors for the section
  double radius = 0.1;          // adaptive sampling radius, meters
  int count = 500;              // descriptors per stage table
};

// Probe radius for a section: the limb criterion radius dr_l scaled by the
// ratio of the section's mean bone length*radius to the limbs'. Throws on a
// degenerate (zero) limb product.
double adaptive_radius(const SkeletonModel& skel, const SectionPolicy& policy,
                       Section section, double dr_l);

// Uniform-in-sphere offsets around anchors drawn uniformly from the pool;
// unary (i == j) with probability 1/2.
std::vector<FeatureDescriptor> sample_descriptors(const SamplingSpec& spec,
                                                  std::uint64_t seed);

// Optional probe instrumentation (benchmark support).
struct FeatureEvalStats {
  std::uint64_t features = 0;
  std::uint64_t pixel_reads = 0;
};

// World position of one probe under the current pose.
inline Vec3 probe_world(const SkeletonModel& skel, const FkResult& fk,
                        int point, const Vec3& dp) {
  const int owner = skel.point_owner_joint(point);
  return fk.positions.col(point) + fk.rotations[owner] * dp;
}

// Depth difference d(w1 pixel) - d(w2 pixel) in meters; out-of-image or
// behind-camera probes read the background sentinel, so the value is total.
double eval_feature(const FeatureDescriptor& desc, const DepthImage& img,
                    const CameraModel& cam, const SkeletonModel& skel,
                    const FkResult& fk, FeatureEvalStats* stats = nullptr);

}  // namespace kinpose
