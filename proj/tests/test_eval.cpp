#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "kinpose/eval.hpp"
#include "test_util.hpp"

using namespace kinpose;

namespace {

const SkeletonModel& skel() {
  static const SkeletonModel s = SkeletonModel::default_model();
  return s;
}

CameraModel small_camera() {
  CameraModel cam;
  cam.width = 256;
  cam.height = 212;
  cam.fx = cam.fy = 182.5;
  cam.cx = 128.0;
  cam.cy = 106.0;
  return cam;
}

CascadeConfig tiny_config() {
  CascadeConfig config;
  config.stages = {1, 2, 1};
  config.forest.n_trees = 3;
  config.forest.max_depth = 6;
  config.forest.candidate_descriptors = 30;
  config.forest.candidate_thresholds = 5;
  config.forest.min_samples_leaf = 1;
  config.forest.bagging_fraction = 1.0;
  config.descriptors_per_stage = 60;
  return config;
}

std::vector<Mat3X> fk_all(const std::vector<Pose>& poses) {
  std::vector<Mat3X> out;
  for (const auto& q : poses) out.push_back(forward_kinematics(skel(), q));
  return out;
}

}  // namespace

TEST_CASE("per_joint_rmse_cm") {
  Rng rng(51);
  std::vector<Pose> truths;
  for (int i = 0; i < 6; ++i)
    truths.push_back(testutil::random_in_limits_pose(skel(), rng));
  const auto truth_pts = fk_all(truths);

  SUBCASE("perfect estimates give zero everywhere") {
    const VecX rmse = per_joint_rmse_cm(truth_pts, truth_pts);
    CHECK(rmse.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("a constant 3 cm displacement of one point shows in its column") {
    auto est = truth_pts;
    for (auto& pts : est) pts.col(4) += Vec3(0.03, 0, 0);
    const VecX rmse = per_joint_rmse_cm(est, truth_pts);
    CHECK(rmse[4] == doctest::Approx(3.0).epsilon(1e-9));
    for (int p = 0; p < skel().point_count(); ++p)
      if (p != 4) CHECK(rmse[p] == 0.0);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(per_joint_rmse_cm({}, {}), std::invalid_argument);
  }
}

TEST_CASE("accuracy_curve") {
  SUBCASE("saturates at one when every error is below the threshold") {
    const auto curve = accuracy_curve({0.5, 0.2, 0.9}, {1, 2, 3});
    for (double f : curve) CHECK(f == 1.0);
  }
  SUBCASE("median split yields one half") {
    const auto curve = accuracy_curve({1, 1, 5, 5}, {3});
    CHECK(curve[0] == 0.5);
  }
  SUBCASE("non-decreasing in the threshold (CDF property)") {
    Rng rng(52);
    std::vector<double> errors;
    for (int i = 0; i < 200; ++i) errors.push_back(rng.uniform(0, 20));
    const auto thresholds = default_thresholds_cm();
    const auto curve = accuracy_curve(errors, thresholds);
    for (size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] >= curve[i - 1]);
    for (double f : curve) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("bone_length_error_cm") {
  Rng rng(53);
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i)
    poses.push_back(testutil::random_in_limits_pose(skel(), rng));
  const auto pts = fk_all(poses);

  SUBCASE("any FK output is structurally exact") {
    CHECK(bone_length_error_cm(pts, skel()).maxCoeff() < 1e-9 * 100);
  }
  SUBCASE("positions scaled by two err by the bone lengths themselves") {
    auto scaled = pts;
    for (auto& p : scaled) p *= 2.0;
    const VecX err = bone_length_error_cm(scaled, skel());
    for (int p = 1; p < skel().point_count(); ++p)
      CHECK(err[p - 1] ==
            doctest::Approx(skel().bone_length(p) * 100).epsilon(1e-9));
  }
}

TEST_CASE("a degenerate one-value sweep equals a direct train and eval") {
  const CameraModel cam = small_camera();
  const auto train_set = generate_frames(skel(), cam, {}, 8, 61, 2);
  const auto test_set = generate_frames(skel(), cam, {}, 4, 62, 2);

  SweepSpec spec;
  spec.axis = SweepAxis::kTreeDepth;
  spec.values = {6};
  const SweepOutcome sweep =
      run_sweep(train_set, test_set, skel(), cam, tiny_config(), spec, 63, 2);
  REQUIRE(sweep.reports.size() == 1);

  CascadeConfig direct_config = tiny_config();
  direct_config.forest.max_depth = 6;
  TrainResult direct =
      train_cascade(train_set, skel(), cam, direct_config, 63, 2);
  ModelFile file;
  file.objective = ObjectiveKind::kGradient;
  file.cascade = std::move(direct.model);
  const EvalReport report = evaluate_model(file, test_set, skel(), cam, 2);

  CHECK(sweep.reports[0].mean_rmse_cm == report.mean_rmse_cm);
  CHECK((sweep.reports[0].per_joint_rmse_cm - report.per_joint_rmse_cm)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  SUBCASE("per-stage traces are non-increasing per section") {
    for (const auto& trace : sweep.traces) {
      double prev = std::numeric_limits<double>::infinity();
      for (const auto& e : trace.entries) {
        if (e.stage == 0) prev = std::numeric_limits<double>::infinity();
        CHECK(e.loss_after <= prev + 1e-12);
        prev = e.loss_after;
      }
    }
  }
}

TEST_CASE("default sweep grids carry the documented values") {
  CHECK(SweepSpec::default_for(SweepAxis::kTreeDepth).values ==
        std::vector<double>{5, 10, 15, 20});
  CHECK(SweepSpec::default_for(SweepAxis::kTreeCount).values ==
        std::vector<double>{1, 8, 16, 24});
  CHECK(SweepSpec::default_for(SweepAxis::kProbeOffsetMm).values ==
        std::vector<double>{50, 80, 100, 120, 150, 200, 1000});
}

TEST_CASE("compare_objectives keeps the structural guarantees") {
  const CameraModel cam = small_camera();
  const auto train_set = generate_frames(skel(), cam, {}, 8, 71, 2);
  const auto test_set = generate_frames(skel(), cam, {}, 4, 72, 2);
  const ObjectiveComparison cmp = compare_objectives(
      train_set, test_set, skel(), cam, tiny_config(), 73, 2);

  // Angle-space outputs preserve bone lengths exactly; the position
  // baseline cannot.
  CHECK(cmp.gradient.bone_err_mean_cm < 1e-9 * 100);
  CHECK(cmp.euler_delta.bone_err_mean_cm < 1e-9 * 100);
  CHECK(cmp.position.bone_err_mean_cm > 0.0);

  // Comparability contract: same frames and thresholds everywhere.
  CHECK(cmp.gradient.frames == cmp.euler_delta.frames);
  CHECK(cmp.gradient.frames == cmp.position.frames);
  CHECK(cmp.gradient.thresholds_cm == cmp.euler_delta.thresholds_cm);
  CHECK(cmp.gradient.thresholds_cm == cmp.position.thresholds_cm);
}

TEST_CASE("benchmark") {
  const CameraModel cam = small_camera();
  const auto frames = generate_frames(skel(), cam, {}, 10, 81, 2);
  CascadeConfig config = tiny_config();
  TrainResult trained = train_cascade(frames, skel(), cam, config, 82, 2);
  ModelFile model;
  model.objective = ObjectiveKind::kGradient;
  model.cascade = std::move(trained.model);

  SUBCASE("an injected clock of 0.1 s over 10 frames reads 100 fps") {
    int calls = 0;
    auto fake_clock = [&]() { return 0.1 * calls++; };
    const BenchReport r = benchmark(model, frames, skel(), cam, 1, fake_clock);
    CHECK(r.fps == doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("feature counts respect the trees-times-depth bound") {
    const BenchReport r = benchmark(model, frames, skel(), cam, 1);
    std::uint64_t bound = 0;
    for (const auto& s : model.cascade.stages)
      bound += std::uint64_t(s.forest.trees.size()) *
               std::uint64_t(s.forest.max_depth);
    CHECK(r.feature_bound == bound);
    CHECK(r.max_features_per_frame <= bound);
    CHECK(r.mean_features_per_frame <= double(bound));
    CHECK(r.mean_features_per_frame > 0);
  }
}

TEST_CASE("eval report serializes with valid curve data") {
  Rng rng(91);
  std::vector<Pose> truths, ests;
  for (int i = 0; i < 5; ++i) {
    truths.push_back(testutil::random_in_limits_pose(skel(), rng));
    ests.push_back(testutil::random_in_limits_pose(skel(), rng));
  }
  const EvalReport report = evaluate_positions(
      fk_all(ests), fk_all(truths), skel(), default_thresholds_cm());
  const nlohmann::json j = report.to_json();
  CHECK(j.at("frames").get<int>() == 5);
  CHECK(j.at("per_joint_rmse_cm").size() == 21);
  CHECK(j.at("accuracy_curve").at("thresholds_cm").size() ==
        default_thresholds_cm().size());
  const std::string csv = report.curve_csv();
  CHECK(csv.find("threshold_cm,fraction_within") == 0);
}
