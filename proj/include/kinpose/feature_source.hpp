#pragma once

#include <mutex>
#include <vector>

#include "kinpose/features.hpp"
#include "kinpose/forest.hpp"

namespace kinpose {

// Memoizing per-stage feature matrix: column d materializes on first use
// and is shared across trees and the train-time predictions. Values are
// pure functions of (descriptor, sample), so concurrent initialization
// cannot perturb training results.
class StageFeatureSource final : public FeatureSource {
 public:
  StageFeatureSource(const std::vector<const DepthImage*>& images,
                     const std::vector<FkResult>& fks,
                     const std::vector<FeatureDescriptor>& descriptors,
                     const SkeletonModel& skel, const CameraModel& cam)
      : images_(images), fks_(fks), descs_(descriptors), skel_(skel),
        cam_(cam), values_(images.size(), descriptors.size()),
        once_(descriptors.size()) {}

  int descriptor_count() const override { return int(descs_.size()); }
  int sample_count() const override { return int(images_.size()); }

  double value(int d, int s) const override {
    std::call_once(once_[d], [&] {
      for (int i = 0; i < sample_count(); ++i)
        values_(i, d) =
            eval_feature(descs_[d], *images_[i], cam_, skel_, fks_[i]);
    });
    return values_(s, d);
  }

 private:
  const std::vector<const DepthImage*>& images_;
  const std::vector<FkResult>& fks_;
  const std::vector<FeatureDescriptor>& descs_;
  const SkeletonModel& skel_;
  const CameraModel& cam_;
  mutable MatX values_;
  mutable std::vector<std::once_flag> once_;
};

}  // namespace kinpose
