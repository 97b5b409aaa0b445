#include "kinpose/meanshift.hpp"

#include <stdexcept>

namespace kinpose {

Mat3X foreground_cloud(const DepthImage& img, const CameraModel& cam) {
  Mat3X cloud(3, img.foreground_count());
  Eigen::Index n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (img.is_foreground(x, y))
        cloud.col(n++) = backproject(cam, x, y, img.at(x, y));
  return cloud;
}

Vec3 meanshift_root_init(const DepthImage& img, const CameraModel& cam,
                         double bandwidth_m, int max_iters, double tol_m) {
  const Mat3X cloud = foreground_cloud(img, cam);
  if (cloud.cols() == 0)
    throw std::invalid_argument("meanshift_root_init: empty foreground");

  Vec3 mode = cloud.rowwise().mean();
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth_m * bandwidth_m);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::ArrayXd d2 =
        (cloud.colwise() - mode).colwise().squaredNorm().transpose().array();
    const Eigen::ArrayXd w = (-d2 * inv_two_h2).exp();
    const Vec3 next = (cloud * w.matrix()) / w.sum();
    const double shift = (next - mode).norm();
    mode = next;
    if (shift < tol_m) break;
  }
  return mode;
}

}  // namespace kinpose
