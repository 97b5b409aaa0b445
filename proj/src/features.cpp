#include "kinpose/features.hpp"

#include <stdexcept>

namespace kinpose {

namespace {

double mean_length_radius_product(const SkeletonModel& skel,
                                  const std::vector<int>& segments) {
  double sum = 0;
  for (int p : segments) sum += skel.bone_length(p) * skel.segment_radius(p);
  return sum / double(segments.size());
}

}  // namespace

double adaptive_radius(const SkeletonModel& skel, const SectionPolicy& policy,
                       Section section, double dr_l) {
  if (!(dr_l > 0))
    throw std::invalid_argument("adaptive_radius: dr_l must be positive");
  const RadiusClass cls = section_radius_class(section);
  if (cls == RadiusClass::kLimb) return dr_l;
  const double limb =
      mean_length_radius_product(skel, policy.segment_group(RadiusClass::kLimb));
  if (limb <= 0)
    throw std::invalid_argument("adaptive_radius: degenerate limb segments");
  const double own = mean_length_radius_product(skel, policy.segment_group(cls));
  return own / limb * dr_l;
}

std::vector<FeatureDescriptor> sample_descriptors(const SamplingSpec& spec,
                                                  std::uint64_t seed) {
  if (spec.count <= 0 || spec.point_pool.empty())
    throw std::invalid_argument("sample_descriptors: empty spec");
  Rng rng(seed);
  std::vector<FeatureDescriptor> out;
  out.reserve(spec.count);
  for (int n = 0; n < spec.count; ++n) {
    FeatureDescriptor d;
    d.point_i = spec.point_pool[rng.uniform_index(spec.point_pool.size())];
    const bool unary = spec.point_pool.size() == 1 || rng.uniform() < 0.5;
    d.point_j = d.point_i;
    while (!unary && d.point_j == d.point_i)
      d.point_j = spec.point_pool[rng.uniform_index(spec.point_pool.size())];
    d.dp1 = rng.uniform_in_sphere(spec.radius);
    d.dp2 = rng.uniform_in_sphere(spec.radius);
    out.push_back(d);
  }
  return out;
}

double eval_feature(const FeatureDescriptor& desc, const DepthImage& img,
                    const CameraModel& cam, const SkeletonModel& skel,
                    const FkResult& fk, FeatureEvalStats* stats) {
  auto probe_depth = [&](int point, const Vec3& dp) {
    const Vec3 w = probe_world(skel, fk, point, dp);
    const auto px = project(cam, w);
    if (!px.in_bounds) return double(kBackgroundDepth);
    return img.sample_nearest(px.u, px.v);
  };
  if (stats) {
    stats->features += 1;
    stats->pixel_reads += 2;
  }
  return probe_depth(desc.point_i, desc.dp1) -
         probe_depth(desc.point_j, desc.dp2);
}

}  // namespace kinpose
