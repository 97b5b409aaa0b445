#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "kinpose/camera.hpp"
#include "kinpose/depth_image.hpp"
#include "kinpose/rng.hpp"
#include "kinpose/skeleton.hpp"

namespace kinpose {

// Procedural-motion knobs: keyposes are drawn uniformly inside the joint
// limits (shrunk by limit_margin) every keyframe_interval frames and
// smoothstep-interpolated in between.
struct MotionConfig {
  int keyframe_interval = 20;
  double limit_margin = 0.05;
};

nlohmann::json motion_to_json(const MotionConfig& m);
MotionConfig motion_from_json(const nlohmann::json& j);

struct DatasetManifest {
  int schema_version = 1;
  CameraModel camera;
  std::string skeleton_hash;
  std::uint64_t seed = 0;
  int n_frames = 0;
  std::vector<std::string> files;  // frame rasters, in frame order
};

// Random pose with every coordinate uniform inside its (shrunk) limits.
Pose sample_keypose(const SkeletonModel& skel, const MotionConfig& motion,
                    Rng& rng);

// The ground-truth pose sequence: deterministic function of the seed,
// independent of worker count and of rendering.
std::vector<Pose> generate_pose_track(const SkeletonModel& skel,
                                      const MotionConfig& motion, int n_frames,
                                      std::uint64_t seed);

// Fraction of body points whose projection lands within `radius_px`
// (Chebyshev) of a foreground pixel.
double foreground_coverage(const SkeletonModel& skel, const CameraModel& cam,
                           const Pose& pose, const DepthImage& img,
                           int radius_px = 2);

// Renders the track to frames. A frame whose rendering is all-background or
// whose joint coverage falls below min_coverage is resampled from a
// frame-local stream; more than 100 consecutive rejections is an error.
std::vector<Frame> generate_frames(const SkeletonModel& skel,
                                   const CameraModel& cam,
                                   const MotionConfig& motion, int n_frames,
                                   std::uint64_t seed, int workers = 1,
                                   double min_coverage = 0.8);

// On-disk container: manifest.json + poses.json + frame_%06d.dpt.
void synth_dataset(const std::string& dir, const SkeletonModel& skel,
                   const CameraModel& cam, const MotionConfig& motion,
                   int n_frames, std::uint64_t seed, int workers = 1);

DatasetManifest read_manifest(const std::string& dir);
std::vector<Frame> load_dataset(const std::string& dir,
                                const DatasetManifest& manifest);

void write_poses_json(const std::string& path,
                      const std::vector<std::pair<int, Pose>>& poses);
std::vector<std::pair<int, Pose>> read_poses_json(const std::string& path);

}  // namespace kinpose
