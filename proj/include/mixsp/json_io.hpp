#pragma once

// JSON forms of the configuration and history records, shared by the
// checkpoint format and the command-line reports.

#include "json.hpp"

#include "mixsp/head.hpp"
#include "mixsp/model.hpp"
#include "mixsp/trainer.hpp"

namespace mixsp {

nlohmann::json to_json(const head::HeadConfig& c);
/// Missing keys keep the values already in `base`.
head::HeadConfig head_config_from_json(const nlohmann::json& j, head::HeadConfig base = {});

nlohmann::json to_json(const trainer::TrainConfig& c);
trainer::TrainConfig train_config_from_json(const nlohmann::json& j, trainer::TrainConfig base = {});

nlohmann::json to_json(const trainer::History& h);
trainer::History history_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ParamCount& c);

}  // namespace mixsp
