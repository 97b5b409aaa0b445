#pragma once

#include "kinpose/camera.hpp"
#include "kinpose/depth_image.hpp"

namespace kinpose {

// Backprojected foreground pixels, one column per point.
Mat3X foreground_cloud(const DepthImage& img, const CameraModel& cam);

// Mode of the foreground point cloud under a Gaussian kernel, iterated from
// the arithmetic centroid. Throws std::invalid_argument on an empty
// foreground.
Vec3 meanshift_root_init(const DepthImage& img, const CameraModel& cam,
                         double bandwidth_m, int max_iters = 50,
                         double tol_m = 1e-4);

}  // namespace kinpose
