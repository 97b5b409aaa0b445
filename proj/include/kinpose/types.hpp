#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace kinpose {

using Scalar = double;

using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Mat3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

// Number of independent joint coordinates of the full-body pose vector.
inline constexpr int kPoseDof = 38;

// The pose vector q: q[0..3) root world translation (m), q[3..6) root
// orientation (rad), q[6..38) relative joint angles (rad).
using Pose = Eigen::Matrix<Scalar, kPoseDof, 1>;

// Depth value assigned to non-body pixels.
inline constexpr float kBackgroundDepth = 1e5f;

// Elementary rotations about the coordinate axes, templated so expression
// code can instantiate them at any scalar.
template <typename T>
Eigen::Matrix<T, 3, 3> rot_x(T a) {
  const T c = std::cos(a), s = std::sin(a);
  Eigen::Matrix<T, 3, 3> m;
  m << T(1), T(0), T(0), T(0), c, -s, T(0), s, c;
  return m;
}

template <typename T>
Eigen::Matrix<T, 3, 3> rot_y(T a) {
  const T c = std::cos(a), s = std::sin(a);
  Eigen::Matrix<T, 3, 3> m;
  m << c, T(0), s, T(0), T(1), T(0), -s, T(0), c;
  return m;
}

template <typename T>
Eigen::Matrix<T, 3, 3> rot_z(T a) {
  const T c = std::cos(a), s = std::sin(a);
  Eigen::Matrix<T, 3, 3> m;
  m << c, -s, T(0), s, c, T(0), T(0), T(0), T(1);
  return m;
}

}  // namespace kinpose
