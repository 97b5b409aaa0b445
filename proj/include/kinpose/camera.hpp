#pragma once

#include <stdexcept>

#include "kinpose/types.hpp"

namespace kinpose {

// Pinhole intrinsics. Pixel centers sit at integer coordinates, so the ray
// of pixel (u,v) passes through ((u-cx)/fx, (v-cy)/fy, 1).
struct CameraModel {
  int width = 512;
  int height = 424;
  double fx = 365.0;
  double fy = 365.0;
  double cx = 256.0;
  double cy = 212.0;
};

struct PixelProjection {
  double u = 0, v = 0;
  bool in_bounds = false;  // false also when the point is behind the camera
};

inline PixelProjection project(const CameraModel& cam, const Vec3& p) {
  PixelProjection out;
  if (!(p.z() > 0)) return out;
  out.u = cam.fx * p.x() / p.z() + cam.cx;
  out.v = cam.fy * p.y() / p.z() + cam.cy;
  out.in_bounds = out.u >= 0 && out.u < cam.width && out.v >= 0 &&
                  out.v < cam.height;
  return out;
}

inline Vec3 backproject(const CameraModel& cam, double u, double v,
                        double depth) {
  if (!(depth > 0) || !std::isfinite(depth) || depth >= kBackgroundDepth)
    throw std::invalid_argument("backproject: depth is not a foreground value");
  return {(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth};
}

}  // namespace kinpose
