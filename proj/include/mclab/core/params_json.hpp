#pragma once

#include <json.hpp>

#include "mclab/core/params.hpp"

namespace mclab {

/// Serializes with the canonical fields v0, theta0, sigma_theta, z0, sigma_z, sigma_r.
nlohmann::json params_to_json(const MCParams& params);

/// Parses an MCParams document.
///
/// The frequency envelope is given either as ("z0", "sigma_z"), as
/// ("m_z", "d_z") or as ("m_z", "b_z"); the latter two are converted on load.
/// Mixing blocks, missing fields and unknown keys are ConfigErrors.
MCParams params_from_json(const nlohmann::json& doc);

}  // namespace mclab
