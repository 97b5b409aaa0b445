#pragma once

#include <nlohmann/json.hpp>

#include "kinpose/camera.hpp"
#include "kinpose/types.hpp"

namespace kinpose {

inline nlohmann::json camera_to_json(const CameraModel& cam) {
  return {{"width", cam.width}, {"height", cam.height}, {"fx", cam.fx},
          {"fy", cam.fy},       {"cx", cam.cx},         {"cy", cam.cy}};
}

inline CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  if (cam.width <= 0 || cam.height <= 0 || cam.fx <= 0 || cam.fy <= 0)
    throw std::invalid_argument("camera: nonpositive raster or focal length");
  return cam;
}

inline nlohmann::json pose_to_json(const Pose& q) {
  nlohmann::json arr = nlohmann::json::array();
  for (int d = 0; d < kPoseDof; ++d) arr.push_back(q[d]);
  return arr;
}

inline Pose pose_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.size() != kPoseDof)
    throw std::invalid_argument("pose: expected a 38-element array");
  Pose q;
  for (int d = 0; d < kPoseDof; ++d) q[d] = arr.at(d).get<double>();
  return q;
}

}  // namespace kinpose
