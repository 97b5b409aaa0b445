#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "kinpose/cascade.hpp"
#include "kinpose/dataset.hpp"

namespace kinpose {

// Every tunable of the toolkit with the experiment-section defaults
// (stages 5/10/5, 16 trees, depth 15, 100 mm probe offset). Parsing is
// strict: unknown keys are rejected, values are range-checked.
struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  CameraModel camera;
  CascadeConfig cascade;
  MotionConfig motion;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static RunConfig load(const std::string& path);
};

}  // namespace kinpose
