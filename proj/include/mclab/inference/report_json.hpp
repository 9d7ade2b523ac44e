#pragma once

#include <json.hpp>

#include "mclab/inference/mle.hpp"
#include "mclab/inference/observer.hpp"
#include "mclab/inference/psychometric.hpp"
#include "mclab/inference/recovery.hpp"

namespace mclab::inference {

/// {"u_max": .., "u0": 0.3, "conditions": [{"z", "sigma", "a"}, ...]}
nlohmann::json model_to_json(const ObserverModel& model);

/// Inverse of model_to_json ("u0" optional, must equal 0.3). Throws ConfigError.
ObserverModel model_from_json(const nlohmann::json& doc);

nlohmann::json fit_to_json(const PsychometricFit& fit);
nlohmann::json recovery_to_json(const RecoveryReport& report);
nlohmann::json mle_to_json(const MleReport& report);

}  // namespace mclab::inference
