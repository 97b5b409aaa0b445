#include "kinpose/config.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "kinpose/json_util.hpp"

namespace kinpose {

namespace {

void reject_unknown_keys(const nlohmann::json& j, const char* scope,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument(std::string("config: unknown key '") + key +
                                  "' in " + scope);
  }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, "top level",
                      {"schema_version", "seed", "workers", "objective",
                       "camera", "stages", "forest", "features", "line_search",
                       "meanshift", "motion"});
  RunConfig c;
  if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
    throw std::invalid_argument("config: unsupported schema_version");
  read_if(j, "seed", &c.seed);
  read_if(j, "workers", &c.workers);
  if (c.workers < 1)
    throw std::invalid_argument("config: workers must be >= 1");
  if (j.contains("objective"))
    c.cascade.objective =
        objective_from_name(j.at("objective").get<std::string>());
  if (j.contains("camera")) {
    reject_unknown_keys(j.at("camera"), "camera",
                        {"width", "height", "fx", "fy", "cx", "cy"});
    nlohmann::json cam = camera_to_json(CameraModel{});
    cam.update(j.at("camera"));
    c.camera = camera_from_json(cam);
  }
  if (j.contains("stages")) {
    const auto& s = j.at("stages");
    reject_unknown_keys(s, "stages", {"root", "torso", "limb"});
    read_if(s, "root", &c.cascade.stages.root);
    read_if(s, "torso", &c.cascade.stages.torso);
    read_if(s, "limb", &c.cascade.stages.limb);
    if (c.cascade.stages.root < 0 || c.cascade.stages.torso < 0 ||
        c.cascade.stages.limb < 0)
      throw std::invalid_argument("config: stage counts must be >= 0");
  }
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    reject_unknown_keys(f, "forest",
                        {"n_trees", "max_depth", "candidate_descriptors",
                         "candidate_thresholds", "min_samples_leaf",
                         "bagging_fraction"});
    read_if(f, "n_trees", &c.cascade.forest.n_trees);
    read_if(f, "max_depth", &c.cascade.forest.max_depth);
    read_if(f, "candidate_descriptors",
            &c.cascade.forest.candidate_descriptors);
    read_if(f, "candidate_thresholds", &c.cascade.forest.candidate_thresholds);
    read_if(f, "min_samples_leaf", &c.cascade.forest.min_samples_leaf);
    read_if(f, "bagging_fraction", &c.cascade.forest.bagging_fraction);
    c.cascade.forest.validate();
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    reject_unknown_keys(f, "features",
                        {"probe_offset_m", "descriptors_per_stage"});
    read_if(f, "probe_offset_m", &c.cascade.probe_offset_m);
    read_if(f, "descriptors_per_stage", &c.cascade.descriptors_per_stage);
    if (!(c.cascade.probe_offset_m > 0) || c.cascade.descriptors_per_stage < 1)
      throw std::invalid_argument("config: bad feature parameters");
  }
  if (j.contains("line_search")) {
    const auto& l = j.at("line_search");
    reject_unknown_keys(l, "line_search", {"beta_max", "tolerance"});
    read_if(l, "beta_max", &c.cascade.beta_max);
    read_if(l, "tolerance", &c.cascade.line_search_tol);
    if (!(c.cascade.beta_max > 0) || !(c.cascade.line_search_tol > 0))
      throw std::invalid_argument("config: bad line-search parameters");
  }
  if (j.contains("meanshift")) {
    const auto& m = j.at("meanshift");
    reject_unknown_keys(m, "meanshift", {"bandwidth_m"});
    read_if(m, "bandwidth_m", &c.cascade.meanshift_bandwidth_m);
    if (!(c.cascade.meanshift_bandwidth_m > 0))
      throw std::invalid_argument("config: bandwidth must be positive");
  }
  if (j.contains("motion")) {
    reject_unknown_keys(j.at("motion"), "motion",
                        {"keyframe_interval", "limit_margin"});
    nlohmann::json m = motion_to_json(MotionConfig{});
    m.update(j.at("motion"));
    c.motion = motion_from_json(m);
  }
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return {{"schema_version", 1},
          {"seed", seed},
          {"workers", workers},
          {"objective", objective_name(cascade.objective)},
          {"camera", camera_to_json(camera)},
          {"stages",
           {{"root", cascade.stages.root},
            {"torso", cascade.stages.torso},
            {"limb", cascade.stages.limb}}},
          {"forest",
           {{"n_trees", cascade.forest.n_trees},
            {"max_depth", cascade.forest.max_depth},
            {"candidate_descriptors", cascade.forest.candidate_descriptors},
            {"candidate_thresholds", cascade.forest.candidate_thresholds},
            {"min_samples_leaf", cascade.forest.min_samples_leaf},
            {"bagging_fraction", cascade.forest.bagging_fraction}}},
          {"features",
           {{"probe_offset_m", cascade.probe_offset_m},
            {"descriptors_per_stage", cascade.descriptors_per_stage}}},
          {"line_search",
           {{"beta_max", cascade.beta_max},
            {"tolerance", cascade.line_search_tol}}},
          {"meanshift", {{"bandwidth_m", cascade.meanshift_bandwidth_m}}},
          {"motion", motion_to_json(motion)}};
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

}  // namespace kinpose
