#include "kinpose/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kinpose/json_util.hpp"
#include "kinpose/parallel.hpp"
#include "kinpose/render.hpp"

namespace kinpose {

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kTrackStream = 0x7261636b;   // pose track
constexpr std::uint64_t kRejectStream = 0x72656a65;  // per-frame resampling

std::string frame_file_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.dpt", id);
  return buf;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

nlohmann::json motion_to_json(const MotionConfig& m) {
  return {{"keyframe_interval", m.keyframe_interval},
          {"limit_margin", m.limit_margin}};
}

MotionConfig motion_from_json(const nlohmann::json& j) {
  MotionConfig m;
  m.keyframe_interval = j.at("keyframe_interval").get<int>();
  m.limit_margin = j.at("limit_margin").get<double>();
  if (m.keyframe_interval < 1 || m.limit_margin < 0 || m.limit_margin >= 0.5)
    throw std::invalid_argument("motion config out of range");
  return m;
}

Pose sample_keypose(const SkeletonModel& skel, const MotionConfig& motion,
                    Rng& rng) {
  Pose q;
  for (int d = 0; d < kPoseDof; ++d) {
    const auto& dof = skel.dofs()[d];
    const double pad = motion.limit_margin * (dof.upper - dof.lower);
    q[d] = rng.uniform(dof.lower + pad, dof.upper - pad);
  }
  return q;
}

std::vector<Pose> generate_pose_track(const SkeletonModel& skel,
                                      const MotionConfig& motion, int n_frames,
                                      std::uint64_t seed) {
  if (n_frames <= 0)
    throw std::invalid_argument("generate_pose_track: n_frames must be > 0");
  const int interval = motion.keyframe_interval;
  const int n_keys = (n_frames - 1) / interval + 2;
  Rng rng(mix64(seed, kTrackStream));
  std::vector<Pose> keys;
  keys.reserve(n_keys);
  for (int k = 0; k < n_keys; ++k)
    keys.push_back(sample_keypose(skel, motion, rng));

  std::vector<Pose> track;
  track.reserve(n_frames);
  for (int t = 0; t < n_frames; ++t) {
    const int k = t / interval;
    const double s = double(t - k * interval) / interval;
    const double w = s * s * (3.0 - 2.0 * s);  // smoothstep
    track.push_back((1.0 - w) * keys[k] + w * keys[k + 1]);
  }
  return track;
}

double foreground_coverage(const SkeletonModel& skel, const CameraModel& cam,
                           const Pose& pose, const DepthImage& img,
                           int radius_px) {
  const Mat3X pts = forward_kinematics(skel, pose);
  int hit = 0;
  for (Eigen::Index m = 0; m < pts.cols(); ++m) {
    const auto px = project(cam, pts.col(m));
    if (!px.in_bounds) continue;
    const int cx = int(std::lround(px.u)), cy = int(std::lround(px.v));
    bool found = false;
    for (int dy = -radius_px; dy <= radius_px && !found; ++dy)
      for (int dx = -radius_px; dx <= radius_px && !found; ++dx) {
        const int x = cx + dx, y = cy + dy;
        if (x >= 0 && x < img.width() && y >= 0 && y < img.height() &&
            img.is_foreground(x, y))
          found = true;
      }
    if (found) ++hit;
  }
  return double(hit) / double(pts.cols());
}

namespace {

Frame make_frame(const SkeletonModel& skel, const CameraModel& cam,
                 const MotionConfig& motion, const Pose& track_pose,
                 int frame_id, std::uint64_t seed, double min_coverage) {
  Pose q = track_pose;
  for (int attempt = 0; attempt <= 100; ++attempt) {
    DepthImage img = render_depth(skel, q, cam);
    if (img.foreground_count() > 0 &&
        foreground_coverage(skel, cam, q, img) >= min_coverage) {
      Frame f;
      f.image = std::move(img);
      f.truth = q;
      f.frame_id = frame_id;
      return f;
    }
    // Resample from a frame-local stream so rejections in one frame never
    // shift any other frame's bytes.
    Rng rng(mix64(mix64(seed, kRejectStream),
                  (std::uint64_t(frame_id) << 8) | std::uint64_t(attempt)));
    MotionConfig safer = motion;
    safer.limit_margin = 0.25;  // keeps the resampled body well in frame
    q = sample_keypose(skel, safer, rng);
  }
  throw std::runtime_error("generate_frames: frame " +
                           std::to_string(frame_id) +
                           " rejected 100 times; check camera/motion config");
}

}  // namespace

std::vector<Frame> generate_frames(const SkeletonModel& skel,
                                   const CameraModel& cam,
                                   const MotionConfig& motion, int n_frames,
                                   std::uint64_t seed, int workers,
                                   double min_coverage) {
  const std::vector<Pose> track =
      generate_pose_track(skel, motion, n_frames, seed);
  std::vector<Frame> frames(n_frames);
  parallel_for(n_frames, workers, [&](int i) {
    frames[i] =
        make_frame(skel, cam, motion, track[i], i, seed, min_coverage);
  });
  return frames;
}

void synth_dataset(const std::string& dir, const SkeletonModel& skel,
                   const CameraModel& cam, const MotionConfig& motion,
                   int n_frames, std::uint64_t seed, int workers) {
  if (n_frames <= 0)
    throw std::invalid_argument("synth_dataset: n_frames must be > 0");
  std::filesystem::create_directories(dir);

  const std::vector<Pose> track =
      generate_pose_track(skel, motion, n_frames, seed);

  DatasetManifest manifest;
  manifest.camera = cam;
  manifest.skeleton_hash = skel.hash();
  manifest.seed = seed;
  manifest.n_frames = n_frames;

  std::vector<std::pair<int, Pose>> poses(n_frames);
  constexpr int kBatch = 128;  // bounds memory while rendering in parallel
  for (int base = 0; base < n_frames; base += kBatch) {
    const int count = std::min(kBatch, n_frames - base);
    std::vector<Frame> batch(count);
    parallel_for(count, workers, [&](int k) {
      batch[k] = make_frame(skel, cam, motion, track[base + k], base + k,
                            seed, 0.8);
    });
    for (int k = 0; k < count; ++k) {
      const int id = base + k;
      const std::string file = frame_file_name(id);
      write_dpt(dir + "/" + file, batch[k].image);
      manifest.files.push_back(file);
      poses[id] = {id, *batch[k].truth};
    }
  }

  nlohmann::json j;
  j["schema_version"] = manifest.schema_version;
  j["camera"] = camera_to_json(manifest.camera);
  j["skeleton_hash"] = manifest.skeleton_hash;
  j["seed"] = manifest.seed;
  j["n_frames"] = manifest.n_frames;
  for (int i = 0; i < n_frames; ++i)
    j["frames"].push_back({{"id", i}, {"file", manifest.files[i]}});
  write_json_file(dir + "/manifest.json", j);
  write_poses_json(dir + "/poses.json", poses);
}

DatasetManifest read_manifest(const std::string& dir) {
  const nlohmann::json j = load_json_file(dir + "/manifest.json");
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("manifest: unsupported schema_version");
  DatasetManifest m;
  m.camera = camera_from_json(j.at("camera"));
  m.skeleton_hash = j.at("skeleton_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_frames = j.at("n_frames").get<int>();
  for (const auto& f : j.at("frames"))
    m.files.push_back(f.at("file").get<std::string>());
  if (int(m.files.size()) != m.n_frames)
    throw std::runtime_error("manifest: frame list length mismatch");
  return m;
}

std::vector<Frame> load_dataset(const std::string& dir,
                                const DatasetManifest& manifest) {
  std::vector<Frame> frames(manifest.n_frames);
  for (int i = 0; i < manifest.n_frames; ++i) {
    frames[i].image = read_dpt(dir + "/" + manifest.files[i]);
    frames[i].frame_id = i;
  }
  const std::string poses_path = dir + "/poses.json";
  if (std::filesystem::exists(poses_path)) {
    for (const auto& [id, q] : read_poses_json(poses_path)) {
      if (id < 0 || id >= manifest.n_frames)
        throw std::runtime_error("poses.json: frame id out of range");
      frames[id].truth = q;
    }
  }
  return frames;
}

void write_poses_json(const std::string& path,
                      const std::vector<std::pair<int, Pose>>& poses) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["frames"] = nlohmann::json::array();
  for (const auto& [id, q] : poses)
    j["frames"].push_back({{"id", id}, {"q", pose_to_json(q)}});
  write_json_file(path, j);
}

std::vector<std::pair<int, Pose>> read_poses_json(const std::string& path) {
  const nlohmann::json j = load_json_file(path);
  std::vector<std::pair<int, Pose>> out;
  for (const auto& f : j.at("frames"))
    out.emplace_back(f.at("id").get<int>(), pose_from_json(f.at("q")));
  return out;
}

}  // namespace kinpose
