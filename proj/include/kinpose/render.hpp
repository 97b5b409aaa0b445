#pragma once

#include <optional>
#include <vector>

#include "kinpose/camera.hpp"
#include "kinpose/depth_image.hpp"
#include "kinpose/skeleton.hpp"

namespace kinpose {

struct Capsule {
  Vec3 a, b;      // segment endpoints, world meters
  double radius = 0;
};

// Smallest t > 0 with |o + t*d - closest point on segment| == radius.
// d need not be normalized.
std::optional<double> ray_capsule_intersect(const Vec3& o, const Vec3& d,
                                            const Capsule& c);

// One capsule per body segment (axis parent->child from FK) plus a sphere
// at the root and one capsule per end site.
std::vector<Capsule> body_capsules(const SkeletonModel& skel,
                                   const FkResult& fk);

// Closed-form depth render of the capsule body: per pixel the z-depth of
// the nearest capsule intersection, background sentinel elsewhere.
DepthImage render_depth(const SkeletonModel& skel, const Pose& pose,
                        const CameraModel& cam);
DepthImage render_capsules(const std::vector<Capsule>& capsules,
                           const CameraModel& cam);

}  // namespace kinpose
