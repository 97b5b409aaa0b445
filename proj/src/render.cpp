#include "kinpose/render.hpp"

#include <algorithm>
#include <cmath>

namespace kinpose {

namespace {

// Smallest positive root of a*t^2 + b*t + c = 0, if any.
std::optional<double> smallest_positive_root(double a, double b, double c) {
  const double disc = b * b - 4 * a * c;
  if (disc < 0 || a == 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable pair.
  const double q = -0.5 * (b + (b >= 0 ? sq : -sq));
  double t0 = q / a, t1 = (q != 0) ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  constexpr double kMinT = 1e-9;
  if (t0 > kMinT) return t0;
  if (t1 > kMinT) return t1;
  return std::nullopt;
}

std::optional<double> ray_sphere(const Vec3& o, const Vec3& d,
                                 const Vec3& center, double r) {
  const Vec3 m = o - center;
  return smallest_positive_root(d.dot(d), 2.0 * m.dot(d),
                                m.dot(m) - r * r);
}

}  // namespace

std::optional<double> ray_capsule_intersect(const Vec3& o, const Vec3& d,
                                            const Capsule& c) {
  const Vec3 ab = c.b - c.a;
  const double len = ab.norm();
  if (len < 1e-12) return ray_sphere(o, d, c.a, c.radius);

  const Vec3 axis = ab / len;
  const Vec3 m = o - c.a;
  const Vec3 dp = d - d.dot(axis) * axis;
  const Vec3 mp = m - m.dot(axis) * axis;

  std::optional<double> best;
  auto consider = [&](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };

  if (auto t = smallest_positive_root(dp.dot(dp), 2.0 * dp.dot(mp),
                                      mp.dot(mp) - c.radius * c.radius)) {
    const double s = (m + *t * d).dot(axis);
    if (s >= 0 && s <= len) consider(t);
  }
  // Cap spheres handle hits beyond the cylinder's axial range and rays
  // nearly parallel to the axis.
  consider(ray_sphere(o, d, c.a, c.radius));
  consider(ray_sphere(o, d, c.b, c.radius));
  return best;
}

std::vector<Capsule> body_capsules(const SkeletonModel& skel,
                                   const FkResult& fk) {
  std::vector<Capsule> out;
  out.reserve(skel.point_count());
  out.push_back({fk.positions.col(0), fk.positions.col(0),
                 skel.joints()[0].radius});
  for (int j = 1; j < skel.joint_count(); ++j)
    out.push_back({fk.positions.col(skel.joints()[j].parent),
                   fk.positions.col(j), skel.joints()[j].radius});
  for (int k = 0; k < skel.end_site_count(); ++k) {
    const auto& e = skel.end_sites()[k];
    out.push_back({fk.positions.col(e.joint),
                   fk.positions.col(skel.joint_count() + k), e.radius});
  }
  return out;
}

DepthImage render_capsules(const std::vector<Capsule>& capsules,
                           const CameraModel& cam) {
  DepthImage img(cam.width, cam.height);

  for (const auto& c : capsules) {
    // Conservative pixel rectangle covering the capsule's silhouette.
    int x0 = 0, x1 = cam.width - 1, y0 = 0, y1 = cam.height - 1;
    const double za = c.a.z(), zb = c.b.z();
    if (za <= c.radius && zb <= c.radius) continue;  // fully behind camera
    if (za > c.radius && zb > c.radius) {
      auto bound = [&](const Vec3& p, double& umin, double& umax,
                       double& vmin, double& vmax) {
        const double su = cam.fx * c.radius / (p.z() - c.radius) + 2.0;
        const double sv = cam.fy * c.radius / (p.z() - c.radius) + 2.0;
        const double u = cam.fx * p.x() / p.z() + cam.cx;
        const double v = cam.fy * p.y() / p.z() + cam.cy;
        umin = std::min(umin, u - su);
        umax = std::max(umax, u + su);
        vmin = std::min(vmin, v - sv);
        vmax = std::max(vmax, v + sv);
      };
      double umin = 1e30, umax = -1e30, vmin = 1e30, vmax = -1e30;
      bound(c.a, umin, umax, vmin, vmax);
      bound(c.b, umin, umax, vmin, vmax);
      x0 = std::max(0, int(std::floor(umin)));
      x1 = std::min(cam.width - 1, int(std::ceil(umax)));
      y0 = std::max(0, int(std::floor(vmin)));
      y1 = std::min(cam.height - 1, int(std::ceil(vmax)));
    }
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec3 dir((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
        const auto t = ray_capsule_intersect(Vec3::Zero(), dir, c);
        if (!t) continue;
        // dir.z == 1, so the ray parameter is the z-depth directly.
        const float z = float(*t);
        if (z > 0 && z < img.at(x, y)) img.at(x, y) = z;
      }
    }
  }
  return img;
}

DepthImage render_depth(const SkeletonModel& skel, const Pose& pose,
                        const CameraModel& cam) {
  return render_capsules(body_capsules(skel, fk_full(skel, pose)), cam);
}

}  // namespace kinpose
