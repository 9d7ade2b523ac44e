#pragma once

#include <json.hpp>

#include <numbers>
#include <vector>

#include "mclab/core/params.hpp"

namespace mclab::experiment {

/// 2AFC speed-discrimination protocol. Speeds in deg/s, frequencies in c/deg.
struct ExperimentConfig {
  double z_star = 1.28;
  double u_star = 5.0;
  double t_star = 0.1;  // s
  std::vector<double> delta_u{-2.0, -1.0, 0.0, 1.0, 2.0};
  std::vector<double> delta_z{-0.48, -0.21, 0.0, 0.32, 0.85};
  int reps_per_cell = 10;
  double theta0 = std::numbers::pi / 2.0;  // grating orientation; motion is horizontal
  double sigma_theta = std::numbers::pi / 12.0;
  double d_z = 1.0;
  int stimulus_ms = 250;
  int isi_ms = 250;

  /// Throws ConfigError for non-positive base values, offsets that make u or
  /// z non-positive, empty or repeated offsets, or non-positive counts/durations.
  void validate() const;

  [[nodiscard]] int n_cells() const { return static_cast<int>(delta_u.size() * delta_z.size()); }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Fully resolved stimulus parameters for speed u and mode frequency z:
/// (z0, sigma_z) from (m_z = z, d_z), sigma_r = 1 / (t_star z0), v0 = (u, 0)
/// and the spectral orientation theta0 - pi/2 (perpendicular to the grating).
MCParams stimulus_params(const ExperimentConfig& config, double u, double z);

nlohmann::json config_to_json(const ExperimentConfig& config);

/// Starts from `base` and applies the fields present in `overrides`.
/// Unknown keys and wrong types are ConfigErrors; the result is validated.
ExperimentConfig config_from_json(const nlohmann::json& overrides, const ExperimentConfig& base = {});

}  // namespace mclab::experiment
