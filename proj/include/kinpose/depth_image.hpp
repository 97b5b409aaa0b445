#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kinpose/types.hpp"

namespace kinpose {

// Row-major calibrated depth raster in meters. Foreground pixels hold the
// scene z-depth; background pixels hold exactly kBackgroundDepth.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height)
      : width_(width), height_(height),
        data_(size_t(width) * size_t(height), kBackgroundDepth) {}
  DepthImage(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<float>& data() const { return data_; }

  float at(int x, int y) const { return data_[size_t(y) * width_ + x]; }
  float& at(int x, int y) { return data_[size_t(y) * width_ + x]; }

  bool is_foreground(int x, int y) const { return at(x, y) < kBackgroundDepth; }

  // Depth at the pixel nearest to continuous coordinates; the background
  // sentinel when the rounded pixel falls outside the raster.
  double sample_nearest(double u, double v) const {
    const long x = std::lround(u), y = std::lround(v);
    if (x < 0 || x >= width_ || y < 0 || y >= height_)
      return double(kBackgroundDepth);
    return double(at(int(x), int(y)));
  }

  int foreground_count() const {
    int n = 0;
    for (float d : data_)
      if (d < kBackgroundDepth) ++n;
    return n;
  }

 private:
  int width_ = 0, height_ = 0;
  std::vector<float> data_;
};

// .dpt container: 16-byte header (magic "DPT1", u32 width, u32 height,
// u32 reserved zero, all little-endian) followed by row-major little-endian
// f32 meters.
void write_dpt(const std::string& path, const DepthImage& img);
DepthImage read_dpt(const std::string& path);

struct Frame {
  DepthImage image;
  std::optional<Pose> truth;  // absent for pure inference input
  int frame_id = 0;
};

}  // namespace kinpose
