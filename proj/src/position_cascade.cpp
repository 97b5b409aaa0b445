#include "kinpose/position_cascade.hpp"

#include <stdexcept>

#include "kinpose/feature_source.hpp"
#include "kinpose/meanshift.hpp"
#include "kinpose/parallel.hpp"

namespace kinpose {

namespace {

constexpr std::uint64_t kDescStream = 0x70646573;
constexpr std::uint64_t kForestStream = 0x70666f72;

std::uint64_t stage_key(std::uint64_t seed, std::uint64_t stream, Section s,
                        int h) {
  return mix64(mix64(seed, stream), (std::uint64_t(s) << 16) | std::uint64_t(h));
}

// Position estimates dressed as an FK result with identity rotations, so
// feature evaluation attaches probes in the camera frame.
FkResult positions_as_fk(const Mat3X& positions, int n_joints) {
  FkResult fk;
  fk.positions = positions;
  fk.rotations.assign(n_joints, Mat3::Identity());
  return fk;
}

// Points a position stage updates: root and torso stages shift the whole
// point set (their pose coordinates move every point in the kinematic
// method); limb stages move only their own points.
std::vector<int> update_subset(const SectionPolicy& policy,
                               const SkeletonModel& skel, Section s) {
  if (s == Section::kRoot || s == Section::kTorso) {
    std::vector<int> all(skel.point_count());
    for (int p = 0; p < skel.point_count(); ++p) all[p] = p;
    return all;
  }
  return policy.position_subset(s);
}

Mat3X initial_positions(const SkeletonModel& skel, const Pose& a_pose,
                        const Vec3& mode) {
  Pose q = a_pose;
  q.head<3>() = mode - skel.a_pose_centroid_offset();
  return forward_kinematics(skel, q);
}

void apply_point_update(Mat3X& positions, const std::vector<int>& subset,
                        double beta, const VecX& g) {
  for (size_t k = 0; k < subset.size(); ++k)
    positions.col(subset[k]) += beta * g.segment<3>(3 * Eigen::Index(k));
}

double section_error(const SectionPolicy& policy, Section section,
                     const std::vector<Mat3X>& est,
                     const std::vector<Mat3X>& truth) {
  const std::vector<int>& pts = policy.position_subset(section);
  double sum = 0;
  for (size_t i = 0; i < est.size(); ++i)
    for (int p : pts) sum += (est[i].col(p) - truth[i].col(p)).norm();
  return sum / double(est.size() * pts.size());
}

}  // namespace

PositionTrainResult train_position_cascade(const std::vector<Frame>& frames,
                                           const SkeletonModel& skel,
                                           const CameraModel& cam,
                                           const CascadeConfig& config,
                                           std::uint64_t seed, int workers) {
  config.forest.validate();
  if (frames.empty())
    throw std::invalid_argument("train_position_cascade: empty dataset");
  const int n = int(frames.size());
  const SectionPolicy policy(skel);

  std::vector<const DepthImage*> images(n);
  std::vector<Mat3X> truth_pts(n);
  for (int i = 0; i < n; ++i) {
    if (!frames[i].truth)
      throw std::invalid_argument("train_position_cascade: missing truth");
    images[i] = &frames[i].image;
  }
  parallel_for(n, workers, [&](int i) {
    truth_pts[i] = forward_kinematics(skel, *frames[i].truth);
  });

  PositionCascadeModel model;
  model.skeleton_hash = skel.hash();
  model.initial_pose = skel.a_pose();
  model.stage_counts = config.stages;
  model.meanshift_bandwidth_m = config.meanshift_bandwidth_m;

  std::vector<Mat3X> positions(n);
  parallel_for(n, workers, [&](int i) {
    const Vec3 mode = meanshift_root_init(*images[i], cam,
                                          config.meanshift_bandwidth_m);
    positions[i] = initial_positions(skel, model.initial_pose, mode);
  });

  TrainTrace trace;
  trace.initial_loss = deterministic_sum(n, workers, [&](int i) {
    return (positions[i] - truth_pts[i]).squaredNorm();
  });

  const std::vector<std::pair<Section, int>> plan = {
      {Section::kRoot, config.stages.root},
      {Section::kTorso, config.stages.torso},
      {Section::kLeftArm, config.stages.limb},
      {Section::kRightArm, config.stages.limb},
      {Section::kLeftLeg, config.stages.limb},
      {Section::kRightLeg, config.stages.limb}};

  for (const auto& [section, n_stages] : plan) {
    const std::vector<int> subset = update_subset(policy, skel, section);
    SamplingSpec spec;
    spec.point_pool = policy.point_pool(section);
    spec.radius = adaptive_radius(skel, policy, section, config.probe_offset_m);
    spec.count = config.descriptors_per_stage;

    for (int h = 0; h < n_stages; ++h) {
      std::vector<FkResult> fks(n);
      parallel_for(n, workers, [&](int i) {
        fks[i] = positions_as_fk(positions[i], skel.joint_count());
      });

      MatX targets(3 * subset.size(), n);
      parallel_for(n, workers, [&](int i) {
        for (size_t k = 0; k < subset.size(); ++k)
          targets.block<3, 1>(3 * Eigen::Index(k), i) =
              truth_pts[i].col(subset[k]) - positions[i].col(subset[k]);
      });
      // Unit-mean-norm reparameterization, as in the kinematic trainer.
      double scale = 0;
      for (int i = 0; i < n; ++i) scale += targets.col(i).norm();
      scale /= double(n);
      if (scale > 0) targets /= scale;

      PositionStageModel stage;
      stage.section = section;
      stage.point_subset = subset;
      stage.descriptors = sample_descriptors(
          spec, stage_key(seed, kDescStream, section, h));

      StageFeatureSource source(images, fks, stage.descriptors, skel, cam);
      stage.forest =
          train_forest(source, targets, config.forest,
                       stage_key(seed, kForestStream, section, h), workers);

      std::vector<VecX> gradients(n);
      parallel_for(n, workers, [&](int i) {
        gradients[i] = predict(stage.forest,
                               [&](int d) { return source.value(d, i); });
      });

      auto loss_at = [&](double beta) {
        return deterministic_sum(n, workers, [&](int i) {
          Mat3X p = positions[i];
          apply_point_update(p, subset, beta, gradients[i]);
          return (p - truth_pts[i]).squaredNorm();
        });
      };
      bool any = false;
      for (const auto& g : gradients)
        if (g.squaredNorm() > 0) { any = true; break; }
      const LineSearchResult ls =
          any ? golden_section_min(loss_at, config.beta_max,
                                   config.line_search_tol)
              : LineSearchResult{0.0, loss_at(0.0)};
      stage.beta = ls.beta;

      parallel_for(n, workers, [&](int i) {
        apply_point_update(positions[i], subset, ls.beta, gradients[i]);
      });

      trace.entries.push_back({section, h, ls.beta, ls.loss,
                               section_error(policy, section, positions,
                                             truth_pts)});
      model.stages.push_back(std::move(stage));
    }
  }

  PositionTrainResult out;
  out.model = std::move(model);
  out.trace = std::move(trace);
  out.final_train_positions = std::move(positions);
  return out;
}

Mat3X infer_positions(const PositionCascadeModel& model, const DepthImage& img,
                      const CameraModel& cam, const SkeletonModel& skel,
                      FeatureEvalStats* stats) {
  const Vec3 mode = meanshift_root_init(img, cam, model.meanshift_bandwidth_m);
  Mat3X positions = initial_positions(skel, model.initial_pose, mode);
  for (const auto& stage : model.stages) {
    const FkResult fk = positions_as_fk(positions, skel.joint_count());
    const VecX g = predict(stage.forest, [&](int d) {
      return eval_feature(stage.descriptors[d], img, cam, skel, fk, stats);
    });
    apply_point_update(positions, stage.point_subset, stage.beta, g);
  }
  return positions;
}

}  // namespace kinpose
