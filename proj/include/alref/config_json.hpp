#pragma once

// nlohmann::json conversions for the configuration structs. Every field is
// written; on read, absent fields keep their current/default value and
// unknown enum spellings throw FormatError.

#include <json.hpp>

#include "alref/coarse.hpp"
#include "alref/loop.hpp"
#include "alref/predictor.hpp"
#include "alref/synthdata.hpp"

namespace alref {

void to_json(nlohmann::json& j, const PredictorConfig& c);
void from_json(const nlohmann::json& j, PredictorConfig& c);

void to_json(nlohmann::json& j, const CoarseSimConfig& c);
void from_json(const nlohmann::json& j, CoarseSimConfig& c);

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

}  // namespace alref
