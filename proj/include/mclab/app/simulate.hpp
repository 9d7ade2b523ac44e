#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "mclab/experiment/session.hpp"
#include "mclab/inference/observer.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::app {

/// One `mclab simulate` run.
struct SimulationJob {
  inference::ObserverModel model;
  experiment::ExperimentConfig experiment;
  int sessions = 1;
  std::string observer = "gaussian";  // or "mle": measurements from mle_speed on synthesized stimuli
  synth::GridSpec mle_grid{32, 32, 8.0, 100.0, 0.0};
};

/// Keys: model (required, as model_to_json), experiment (overrides),
/// sessions, observer, mle_grid.
SimulationJob simulation_job_from_json(const nlohmann::json& doc);

/// Schedules and answers `job.sessions` sessions; session i uses seeds derived from (seed, i).
std::vector<experiment::Session> simulate_sessions(const SimulationJob& job, std::uint64_t seed);

/// Grid for the MLE observer: `base` with fps raised (in steps of 100) until
/// one AR step per frame is stable with margin.
synth::GridSpec mle_stimulus_grid(const MCParams& params, const synth::GridSpec& base);

}  // namespace mclab::app
