#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>

#include "mclab/experiment/config.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::app {

/// Settings of the CLI and HTTP service.
struct AppConfig {
  int port = 8080;  // 0 binds an ephemeral port
  std::filesystem::path cache_dir = ".mclab-cache";
  std::filesystem::path static_dir;  // served at / when non-empty
  synth::GridSpec grid;              // stimulus grid; delta is chosen per stimulus
  experiment::ExperimentConfig experiment;
  std::uint64_t master_seed = 1;

  /// Throws ConfigError on an invalid port, grid or experiment, and IoError
  /// if the cache directory cannot be created or written.
  void validate() const;

  [[nodiscard]] std::filesystem::path stimuli_dir() const { return cache_dir / "stimuli"; }
  [[nodiscard]] std::filesystem::path sessions_dir() const { return cache_dir / "sessions"; }
};

/// Keys: port, cache_dir, static_dir, grid, experiment (overrides of the
/// default protocol), master_seed. Unknown keys are ConfigErrors.
AppConfig app_config_from_json(const nlohmann::json& doc, AppConfig base = {});
nlohmann::json app_config_to_json(const AppConfig& config);

/// Defaults, then the file at `path` (if non-empty), then MCLAB_CACHE.
AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace mclab::app
