#include "kinpose/cascade.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "kinpose/feature_source.hpp"
#include "kinpose/meanshift.hpp"
#include "kinpose/parallel.hpp"

namespace kinpose {

namespace {

constexpr std::uint64_t kDescStream = 0x64657363;
constexpr std::uint64_t kForestStream = 0x666f7265;

std::uint64_t stage_key(std::uint64_t seed, std::uint64_t stream, Section s,
                        int h) {
  return mix64(mix64(seed, stream), (std::uint64_t(s) << 16) | std::uint64_t(h));
}

Eigen::Map<const VecX> flat(const Mat3X& m) {
  return Eigen::Map<const VecX>(m.data(), m.size());
}

double point_loss(const Mat3X& a, const Mat3X& b) {
  return (a - b).squaredNorm();
}

}  // namespace

const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::kGradient: return "gradient";
    case ObjectiveKind::kEulerDelta: return "euler_delta";
    case ObjectiveKind::kPosition: return "position";
  }
  return "?";
}

ObjectiveKind objective_from_name(const std::string& name) {
  if (name == "gradient") return ObjectiveKind::kGradient;
  if (name == "euler_delta") return ObjectiveKind::kEulerDelta;
  if (name == "position") return ObjectiveKind::kPosition;
  throw std::invalid_argument("unknown objective '" + name + "'");
}

double pose_loss(const SkeletonModel& skel, const std::vector<Pose>& poses,
                 const std::vector<Pose>& truths) {
  if (poses.size() != truths.size())
    throw std::invalid_argument("pose_loss: size mismatch");
  double total = 0;
  for (size_t i = 0; i < poses.size(); ++i)
    total += point_loss(forward_kinematics(skel, poses[i]),
                        forward_kinematics(skel, truths[i]));
  return total;
}

VecX regression_target(const SkeletonModel& skel, const Pose& current,
                       const Pose& truth, const std::vector<int>& dof_subset) {
  const FkResult fk = fk_full(skel, current);
  const Mat3X truth_pts = forward_kinematics(skel, truth);
  const MatX jac = pose_jacobian(skel, fk);
  const VecX residual = flat(fk.positions) - flat(truth_pts);
  VecX out(dof_subset.size());
  for (size_t k = 0; k < dof_subset.size(); ++k)
    out[Eigen::Index(k)] = -jac.col(dof_subset[k]).dot(residual);
  return out;
}

LineSearchResult golden_section_min(const std::function<double(double)>& f,
                                    double beta_max, double tol) {
  const double zero_loss = f(0.0);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = beta_max;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  const double beta = 0.5 * (a + b);
  const double beta_loss = f(beta);
  if (zero_loss <= beta_loss) return {0.0, zero_loss};
  return {beta, beta_loss};
}

namespace {

LineSearchResult line_search_over_positions(
    const SkeletonModel& skel, const std::vector<Pose>& poses,
    const std::vector<VecX>& gradients, const std::vector<Mat3X>& truth_pts,
    const std::vector<int>& dof_subset, double beta_max, double tol,
    int workers) {
  bool any_nonzero = false;
  for (const auto& g : gradients)
    if (g.squaredNorm() > 0) {
      any_nonzero = true;
      break;
    }
  const int n = int(poses.size());
  auto loss_at = [&](double beta) {
    return deterministic_sum(n, workers, [&](int i) {
      const Pose q = apply_dof_subset(poses[i], beta * gradients[i],
                                      dof_subset);
      return point_loss(forward_kinematics(skel, q), truth_pts[i]);
    });
  };
  if (!any_nonzero) return {0.0, loss_at(0.0)};
  return golden_section_min(loss_at, beta_max, tol);
}

}  // namespace

LineSearchResult stage_line_search(const SkeletonModel& skel,
                                   const std::vector<Pose>& poses,
                                   const std::vector<VecX>& gradients,
                                   const std::vector<Pose>& truths,
                                   const std::vector<int>& dof_subset,
                                   double beta_max, double tol, int workers) {
  if (poses.size() != gradients.size() || poses.size() != truths.size())
    throw std::invalid_argument("stage_line_search: size mismatch");
  std::vector<Mat3X> truth_pts(truths.size());
  for (size_t i = 0; i < truths.size(); ++i)
    truth_pts[i] = forward_kinematics(skel, truths[i]);
  return line_search_over_positions(skel, poses, gradients, truth_pts,
                                    dof_subset, beta_max, tol, workers);
}

Pose initial_pose(const DepthImage& img, const CameraModel& cam,
                  const SkeletonModel& skel, const Pose& a_pose,
                  double bandwidth_m) {
  const Vec3 mode = meanshift_root_init(img, cam, bandwidth_m);
  Pose q = a_pose;
  q.head<3>() = mode - skel.a_pose_centroid_offset();
  return q;
}

Pose initial_pose(const DepthImage& img, const CameraModel& cam,
                  const SkeletonModel& skel, const CascadeModel& model) {
  return initial_pose(img, cam, skel, model.initial_pose,
                      model.meanshift_bandwidth_m);
}

// ---------------------------------------------------------------------------
// training

namespace {

// Mean distance between estimate and truth over the section's reported
// points (the per-stage error curve of the experiments section).
double section_error(const SectionPolicy& policy, Section section,
                     const std::vector<Mat3X>& est,
                     const std::vector<Mat3X>& truth) {
  const std::vector<int>& pts = policy.position_subset(section);
  double sum = 0;
  for (size_t i = 0; i < est.size(); ++i)
    for (int p : pts) sum += (est[i].col(p) - truth[i].col(p)).norm();
  return sum / double(est.size() * pts.size());
}

class CascadeTrainer {
 public:
  CascadeTrainer(const std::vector<Frame>& frames, const SkeletonModel& skel,
                 const CameraModel& cam, const CascadeConfig& config,
                 std::uint64_t seed, int workers)
      : frames_(frames), skel_(skel), cam_(cam), config_(config), seed_(seed),
        workers_(workers), policy_(skel) {
    if (frames.empty())
      throw std::invalid_argument("train_cascade: empty dataset");
    const int n = int(frames.size());
    images_.resize(n);
    truths_.resize(n);
    truth_pts_.resize(n);
    for (int i = 0; i < n; ++i) {
      if (!frames[i].truth)
        throw std::invalid_argument("train_cascade: frame " +
                                    std::to_string(frames[i].frame_id) +
                                    " lacks ground truth");
      images_[i] = &frames[i].image;
      truths_[i] = *frames[i].truth;
    }
    parallel_for(n, workers_, [&](int i) {
      truth_pts_[i] = forward_kinematics(skel_, truths_[i]);
    });
  }

  TrainResult run() {
    const int n = int(frames_.size());
    model_.skeleton_hash = skel_.hash();
    model_.canonical_pose = skel_.a_pose();
    model_.initial_pose = skel_.a_pose();
    model_.stage_counts = config_.stages;
    model_.objective = config_.objective;
    model_.meanshift_bandwidth_m = config_.meanshift_bandwidth_m;

    poses_.resize(n);
    parallel_for(n, workers_, [&](int i) {
      poses_[i] = initial_pose(*images_[i], cam_, skel_, model_.initial_pose,
                               config_.meanshift_bandwidth_m);
    });
    trace_.initial_loss = current_loss(poses_);

    run_section(Section::kRoot, config_.stages.root, poses_);

    // Re-initialize all non-root coordinates to canonical values on top of
    // the estimated root before the torso cascade.
    const Pose canonical = model_.canonical_pose;
    for (auto& q : poses_) q.tail(kPoseDof - 6) = canonical.tail(kPoseDof - 6);

    run_section(Section::kTorso, config_.stages.torso, poses_);

    // The four limb chains run independently from the post-torso poses and
    // merge their disjoint coordinate updates.
    const std::vector<Pose> base = poses_;
    for (Section s : {Section::kLeftArm, Section::kRightArm,
                      Section::kLeftLeg, Section::kRightLeg}) {
      std::vector<Pose> limb_poses = base;
      run_section(s, config_.stages.limb, limb_poses);
      const auto& dofs = policy_.dof_subset(s);
      for (int i = 0; i < n; ++i)
        for (int d : dofs) poses_[i][d] = limb_poses[i][d];
    }

    TrainResult out;
    out.model = std::move(model_);
    out.trace = std::move(trace_);
    out.final_train_poses = std::move(poses_);
    return out;
  }

 private:
  double current_loss(const std::vector<Pose>& poses) const {
    return deterministic_sum(int(poses.size()), workers_, [&](int i) {
      return point_loss(forward_kinematics(skel_, poses[i]), truth_pts_[i]);
    });
  }

  void run_section(Section section, int n_stages, std::vector<Pose>& poses) {
    if (n_stages <= 0) return;
    const int n = int(poses.size());
    const auto& dofs = policy_.dof_subset(section);
    if (dofs.empty())
      throw std::invalid_argument("train_cascade: empty dof subset");

    SamplingSpec spec;
    spec.point_pool = policy_.point_pool(section);
    spec.radius = adaptive_radius(skel_, policy_, section,
                                  config_.probe_offset_m);
    spec.count = config_.descriptors_per_stage;

    for (int h = 0; h < n_stages; ++h) {
      std::vector<FkResult> fks(n);
      parallel_for(n, workers_, [&](int i) {
        fks[i] = fk_full(skel_, poses[i]);
      });

      MatX targets(dofs.size(), n);
      if (config_.objective == ObjectiveKind::kGradient) {
        parallel_for(n, workers_, [&](int i) {
          const MatX jac = pose_jacobian(skel_, fks[i]);
          const VecX residual = flat(fks[i].positions) - flat(truth_pts_[i]);
          for (size_t k = 0; k < dofs.size(); ++k)
            targets(Eigen::Index(k), i) = -jac.col(dofs[k]).dot(residual);
        });
      } else {  // euler_delta
        parallel_for(n, workers_, [&](int i) {
          for (size_t k = 0; k < dofs.size(); ++k)
            targets(Eigen::Index(k), i) = truths_[i][dofs[k]] - poses[i][dofs[k]];
        });
      }
      // Normalize to unit mean norm. The split criterion is scale
      // invariant, so this only reparameterizes the learned step size,
      // keeping the optimum inside the fixed search bracket for sections
      // whose raw gradients are small (short lever arms).
      double scale = 0;
      for (int i = 0; i < n; ++i) scale += targets.col(i).norm();
      scale /= double(n);
      if (scale > 0) targets /= scale;

      StageModel stage;
      stage.section = section;
      stage.dof_subset = dofs;
      stage.descriptors = sample_descriptors(
          spec, stage_key(seed_, kDescStream, section, h));

      StageFeatureSource source(images_, fks, stage.descriptors, skel_, cam_);
      stage.forest =
          train_forest(source, targets, config_.forest,
                       stage_key(seed_, kForestStream, section, h), workers_);

      std::vector<VecX> gradients(n);
      parallel_for(n, workers_, [&](int i) {
        gradients[i] = predict(stage.forest,
                               [&](int d) { return source.value(d, i); });
      });

      const auto ls = line_search_over_positions(
          skel_, poses, gradients, truth_pts_, dofs, config_.beta_max,
          config_.line_search_tol, workers_);
      stage.beta = ls.beta;

      parallel_for(n, workers_, [&](int i) {
        poses[i] = apply_dof_subset(poses[i], ls.beta * gradients[i], dofs);
      });

      std::vector<Mat3X> est(n);
      parallel_for(n, workers_, [&](int i) {
        est[i] = forward_kinematics(skel_, poses[i]);
      });
      trace_.entries.push_back({section, h, ls.beta, ls.loss,
                                section_error(policy_, section, est,
                                              truth_pts_)});
      model_.stages.push_back(std::move(stage));
    }
  }

  const std::vector<Frame>& frames_;
  const SkeletonModel& skel_;
  const CameraModel& cam_;
  CascadeConfig config_;
  std::uint64_t seed_;
  int workers_;
  SectionPolicy policy_;

  std::vector<const DepthImage*> images_;
  std::vector<Pose> truths_;
  std::vector<Mat3X> truth_pts_;
  std::vector<Pose> poses_;
  CascadeModel model_;
  TrainTrace trace_;
};

}  // namespace

TrainResult train_cascade(const std::vector<Frame>& frames,
                          const SkeletonModel& skel, const CameraModel& cam,
                          const CascadeConfig& config, std::uint64_t seed,
                          int workers) {
  config.forest.validate();
  return CascadeTrainer(frames, skel, cam, config, seed, workers).run();
}

// ---------------------------------------------------------------------------
// inference

Pose infer_hooked(const CascadeModel& model, const DepthImage& img,
                  const CameraModel& cam, const SkeletonModel& skel,
                  std::vector<Pose>* stage_poses, FeatureEvalStats* stats,
                  const std::function<void(const StageModel&)>& after_stage) {
  Pose q = initial_pose(img, cam, skel, model);
  if (stage_poses) stage_poses->push_back(q);

  auto apply_stage = [&](Pose& pose, const StageModel& stage) {
    const FkResult fk = fk_full(skel, pose);
    const VecX g = predict(stage.forest, [&](int d) {
      return eval_feature(stage.descriptors[d], img, cam, skel, fk, stats);
    });
    pose = apply_dof_subset(pose, stage.beta * g, stage.dof_subset);
    if (stage_poses) stage_poses->push_back(pose);
    if (after_stage) after_stage(stage);
  };

  size_t i = 0;
  for (; i < model.stages.size() && model.stages[i].section == Section::kRoot;
       ++i)
    apply_stage(q, model.stages[i]);

  // Canonical torso re-initialization on top of the estimated root, as in
  // training.
  q.tail(kPoseDof - 6) = model.canonical_pose.tail(kPoseDof - 6);
  if (stage_poses) stage_poses->push_back(q);

  for (; i < model.stages.size() && model.stages[i].section == Section::kTorso;
       ++i)
    apply_stage(q, model.stages[i]);

  const Pose base = q;
  Pose merged = q;
  while (i < model.stages.size()) {
    const Section section = model.stages[i].section;
    // All stages of a limb share one dof subset; the stored table is
    // authoritative for the merge.
    const std::vector<int>& dofs = model.stages[i].dof_subset;
    Pose limb = base;
    for (; i < model.stages.size() && model.stages[i].section == section; ++i)
      apply_stage(limb, model.stages[i]);
    for (int d : dofs) merged[d] = limb[d];
  }
  if (stage_poses) stage_poses->push_back(merged);
  return merged;
}

Pose infer_with_trace(const CascadeModel& model, const DepthImage& img,
                      const CameraModel& cam, const SkeletonModel& skel,
                      std::vector<Pose>* stage_poses,
                      FeatureEvalStats* stats) {
  return infer_hooked(model, img, cam, skel, stage_poses, stats, nullptr);
}

Pose infer(const CascadeModel& model, const DepthImage& img,
           const CameraModel& cam, const SkeletonModel& skel,
           FeatureEvalStats* stats) {
  return infer_hooked(model, img, cam, skel, nullptr, stats, nullptr);
}

}  // namespace kinpose
