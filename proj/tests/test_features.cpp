#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kinpose/features.hpp"
#include "kinpose/render.hpp"
#include "test_util.hpp"

using namespace kinpose;

namespace {

const SkeletonModel& skel() {
  static const SkeletonModel s = SkeletonModel::default_model();
  return s;
}
const SectionPolicy& policy() {
  static const SectionPolicy p(skel());
  return p;
}

}  // namespace

TEST_CASE("adaptive_radius") {
  SUBCASE("limb section returns the criterion radius unchanged") {
    CHECK(adaptive_radius(skel(), policy(), Section::kLeftArm, 0.1) == 0.1);
    CHECK(adaptive_radius(skel(), policy(), Section::kRightLeg, 0.07) == 0.07);
  }
  SUBCASE("equal products leave the radius unchanged") {
    // Uniform geometry: every segment has the same length*radius product.
    std::vector<JointSpec> joints = SkeletonModel::default_model().joints();
    std::vector<DofSpec> dofs = SkeletonModel::default_model().dofs();
    std::vector<EndSiteSpec> sites = SkeletonModel::default_model().end_sites();
    for (auto& j : joints) {
      if (j.parent >= 0) j.offset = j.offset.normalized() * 0.3;
      j.radius = 0.05;
    }
    for (auto& e : sites) {
      e.offset = e.offset.normalized() * 0.3;
      e.radius = 0.05;
    }
    const SkeletonModel uniform(joints, dofs, sites,
                                SkeletonModel::default_model().a_pose());
    const SectionPolicy up(uniform);
    CHECK(adaptive_radius(uniform, up, Section::kRoot, 0.1) ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK(adaptive_radius(uniform, up, Section::kTorso, 0.1) ==
          doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("a doubled section product doubles the radius") {
    // Same uniform skeleton but the root-group segments get twice the
    // length*radius product.
    std::vector<JointSpec> joints = SkeletonModel::default_model().joints();
    std::vector<DofSpec> dofs = SkeletonModel::default_model().dofs();
    std::vector<EndSiteSpec> sites = SkeletonModel::default_model().end_sites();
    for (auto& j : joints) {
      if (j.parent >= 0) j.offset = j.offset.normalized() * 0.3;
      j.radius = 0.05;
    }
    for (auto& e : sites) {
      e.offset = e.offset.normalized() * 0.3;
      e.radius = 0.05;
    }
    const int lower_back = 1, upper_back = 2;
    joints[lower_back].radius = 0.10;  // doubles length*radius
    joints[upper_back].radius = 0.10;
    const SkeletonModel boosted(joints, dofs, sites,
                                SkeletonModel::default_model().a_pose());
    const SectionPolicy bp(boosted);
    CHECK(adaptive_radius(boosted, bp, Section::kRoot, 0.100) ==
          doctest::Approx(0.200).epsilon(1e-12));
  }
  SUBCASE("matches direct re-evaluation of the ratio on the default body") {
    for (Section s : {Section::kRoot, Section::kTorso}) {
      auto product = [&](RadiusClass c) {
        double sum = 0;
        const auto& group = policy().segment_group(c);
        for (int p : group)
          sum += skel().bone_length(p) * skel().segment_radius(p);
        return sum / double(group.size());
      };
      const double expect = product(section_radius_class(s)) /
                            product(RadiusClass::kLimb) * 0.1;
      CHECK(adaptive_radius(skel(), policy(), s, 0.1) ==
            doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("nonpositive criterion radius throws") {
    CHECK_THROWS_AS(adaptive_radius(skel(), policy(), Section::kRoot, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("sample_descriptors") {
  SamplingSpec spec;
  spec.point_pool = policy().point_pool(Section::kTorso);
  spec.radius = 0.13;
  spec.count = 10'000;
  const auto descs = sample_descriptors(spec, 99);
  REQUIRE(int(descs.size()) == spec.count);

  SUBCASE("offsets stay inside the sampling sphere") {
    for (const auto& d : descs) {
      CHECK(d.dp1.norm() <= spec.radius + 1e-12);
      CHECK(d.dp2.norm() <= spec.radius + 1e-12);
    }
  }
  SUBCASE("unary fraction concentrates around one half") {
    int unary = 0;
    for (const auto& d : descs)
      if (d.is_unary()) ++unary;
    const double frac = double(unary) / double(descs.size());
    CHECK(frac > 0.48);
    CHECK(frac < 0.52);
  }
  SUBCASE("anchors come from the pool") {
    for (const auto& d : descs) {
      CHECK(std::count(spec.point_pool.begin(), spec.point_pool.end(),
                       d.point_i) == 1);
      CHECK(std::count(spec.point_pool.begin(), spec.point_pool.end(),
                       d.point_j) == 1);
    }
  }
  SUBCASE("same seed reproduces the list") {
    const auto again = sample_descriptors(spec, 99);
    for (size_t i = 0; i < descs.size(); ++i) {
      CHECK(again[i].point_i == descs[i].point_i);
      CHECK(again[i].point_j == descs[i].point_j);
      CHECK((again[i].dp1 - descs[i].dp1).cwiseAbs().maxCoeff() == 0.0);
      CHECK((again[i].dp2 - descs[i].dp2).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("offset distribution is centered (uniform-sphere symmetry)") {
    Vec3 mean = Vec3::Zero();
    for (const auto& d : descs) mean += d.dp1;
    mean /= double(descs.size());
    // 3-sigma bound for the mean of uniform-ball draws: sigma_component
    // = R/sqrt(5), so |mean| <= 3 R sqrt(3/5)/sqrt(n).
    const double bound =
        3.0 * spec.radius * std::sqrt(3.0 / 5.0) / std::sqrt(descs.size());
    CHECK(mean.norm() < bound);
  }
}

TEST_CASE("eval_feature") {
  const CameraModel cam;  // default raster
  Rng rng(31);
  const Pose q = testutil::random_in_limits_pose(skel(), rng);
  const FkResult fk = fk_full(skel(), q);
  const DepthImage img = render_depth(skel(), q, cam);

  SUBCASE("identical probes cancel exactly") {
    FeatureDescriptor d;
    d.point_i = d.point_j = 2;
    d.dp1 = d.dp2 = Vec3(0.05, -0.02, 0.01);
    CHECK(eval_feature(d, img, cam, skel(), fk) == 0.0);
  }
  SUBCASE("both probes out of image read the sentinel and cancel") {
    FeatureDescriptor d;
    d.point_i = d.point_j = 0;
    d.dp1 = Vec3(50.0, 0, 0);   // far outside any raster
    d.dp2 = Vec3(-50.0, 0, 0);
    CHECK(eval_feature(d, img, cam, skel(), fk) == 0.0);
  }
  SUBCASE("behind-camera probe reads the sentinel") {
    FeatureDescriptor d;
    d.point_i = d.point_j = 0;
    d.dp1 = Vec3(0, 0, -10.0);  // behind the camera
    d.dp2 = Vec3(0, 0, -10.0);
    CHECK(eval_feature(d, img, cam, skel(), fk) == 0.0);
  }
  SUBCASE("analytic wall-and-capsule scene") {
    // A flat wall at depth z_w plus one sphere on the optical axis; probe 1
    // reads the sphere's center pixel, probe 2 reads bare wall.
    const double z_w = 3.0, z_c = 2.0, r = 0.25;
    DepthImage scene(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) scene.at(x, y) = float(z_w);
    const DepthImage ball =
        render_capsules({{Vec3(0, 0, z_c), Vec3(0, 0, z_c), r}}, cam);
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x)
        if (ball.is_foreground(x, y))
          scene.at(x, y) = std::min(scene.at(x, y), ball.at(x, y));

    // A skeleton-free probe pair: anchor both probes at the root joint and
    // give the pose a root position such that probe 1 lands on the sphere
    // center pixel and probe 2 far to the side on the wall.
    Pose probe_pose = Pose::Zero();
    probe_pose.head<3>() = Vec3(0, 0, z_c);
    const FkResult pfk = fk_full(skel(), probe_pose);
    FeatureDescriptor d;
    d.point_i = d.point_j = 0;
    d.dp1 = Vec3(0, 0, 0);        // projects to the sphere center
    d.dp2 = Vec3(1.0, 0, 0);      // projects well off the sphere
    const double f = eval_feature(d, scene, cam, skel(), pfk);
    CHECK(std::abs(f - ((z_c - r) - z_w)) < 0.002);
  }
  SUBCASE("probe offsets keep their norm under any pose (rigid attachment)") {
    Rng rng2(32);
    SamplingSpec spec;
    spec.point_pool = policy().point_pool(Section::kLeftArm);
    spec.radius = 0.1;
    spec.count = 50;
    const auto descs = sample_descriptors(spec, 5);
    for (int trial = 0; trial < 20; ++trial) {
      const Pose qq = testutil::random_in_limits_pose(skel(), rng2);
      const FkResult fkk = fk_full(skel(), qq);
      for (const auto& d : descs) {
        const Vec3 w = probe_world(skel(), fkk, d.point_i, d.dp1);
        const double dist = (w - fkk.positions.col(d.point_i)).norm();
        CHECK(dist == doctest::Approx(d.dp1.norm()).epsilon(1e-12));
      }
    }
  }
  SUBCASE("stats instrumentation counts features and pixel reads") {
    FeatureEvalStats stats;
    FeatureDescriptor d;
    d.point_i = d.point_j = 3;
    d.dp1 = Vec3(0.02, 0, 0);
    d.dp2 = Vec3(0, 0.02, 0);
    eval_feature(d, img, cam, skel(), fk, &stats);
    eval_feature(d, img, cam, skel(), fk, &stats);
    CHECK(stats.features == 2);
    CHECK(stats.pixel_reads == 4);
  }
}
