#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "kinpose/cascade.hpp"
#include "kinpose/position_cascade.hpp"

namespace kinpose {

// Self-describing binary model container (magic "CPRM"). One format holds
// both the kinematic cascades and the position baseline; load(save(m))
// reproduces predictions bit-exactly because doubles are stored raw.
struct ModelFile {
  ObjectiveKind objective = ObjectiveKind::kGradient;
  CascadeModel cascade;            // when objective != kPosition
  PositionCascadeModel position;   // when objective == kPosition
  std::string config_echo;         // training RunConfig as JSON text
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const std::string& path, const ModelFile& model);
// Throws std::runtime_error on unknown magic or format version.
ModelFile load_model(const std::string& path);

// Human-readable dump of the container for debugging.
nlohmann::json model_to_json(const ModelFile& model);

}  // namespace kinpose
