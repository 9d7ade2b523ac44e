#include "mclab/app/simulate.hpp"

#include <cmath>
#include <set>

#include "mclab/core/errors.hpp"
#include "mclab/core/random.hpp"
#include "mclab/inference/mle.hpp"
#include "mclab/inference/report_json.hpp"
#include "mclab/synth/ar2.hpp"

namespace mclab::app {

SimulationJob simulation_job_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("simulate config: expected a JSON object");
  static const std::set<std::string> known = {"model", "experiment", "sessions", "observer", "mle_grid"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("simulate config: unknown field '" + key + "'");
  }
  if (!doc.contains("model")) throw ConfigError("simulate config: missing 'model'");
  SimulationJob job;
  job.model = inference::model_from_json(doc["model"]);
  if (doc.contains("experiment")) job.experiment = experiment::config_from_json(doc["experiment"]);
  if (doc.contains("mle_grid")) job.mle_grid = synth::grid_from_json(doc["mle_grid"]);
  try {
    if (doc.contains("sessions")) job.sessions = doc["sessions"].get<int>();
    if (doc.contains("observer")) job.observer = doc["observer"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulate config: ") + e.what());
  }
  if (job.sessions < 1) throw ConfigError("simulate config: sessions must be >= 1");
  if (job.observer != "gaussian" && job.observer != "mle") {
    throw ConfigError("simulate config: observer must be gaussian or mle");
  }
  for (double dz : job.experiment.delta_z) {
    if (!job.model.defined_at(job.experiment.z_star + dz)) {
      throw ConfigError("simulate config: model has no condition at z = " + std::to_string(job.experiment.z_star + dz));
    }
  }
  return job;
}

synth::GridSpec mle_stimulus_grid(const MCParams& params, const synth::GridSpec& base) {
  synth::GridSpec g = base;
  g.delta = 0.0;
  const double nu = synth::min_relaxation_time(params, g);
  g.fps = 100.0 * std::ceil(1.0 / (0.5 * nu * 100.0));
  return g;
}

std::vector<experiment::Session> simulate_sessions(const SimulationJob& job, std::uint64_t seed) {
  std::vector<experiment::Session> out;
  for (int i = 0; i < job.sessions; ++i) {
    const std::uint64_t session_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i)));
    experiment::Session s("sim-" + std::to_string(seed) + "-" + std::to_string(i), job.experiment, session_seed);
    const std::uint64_t observer_seed = splitmix64(session_seed);
    if (job.observer == "gaussian") {
      experiment::respond_with_observer(s, job.model, observer_seed);
    } else {
      const auto& cfg = job.experiment;
      const inference::StimulusFactory factory = [&](const inference::Interval& iv, std::uint64_t stim_seed) {
        const MCParams p = experiment::stimulus_params(cfg, iv.u, iv.z);
        const synth::GridSpec g = mle_stimulus_grid(p, job.mle_grid);
        const int frames = std::max(3, static_cast<int>(std::lround(cfg.stimulus_ms * g.fps / 1000.0)));
        return inference::MleStimulus{synth::synth_stream(p, g, frames, stim_seed, true), p};
      };
      std::vector<int> ids;
      std::vector<inference::TrialPair> pairs;
      for (const auto& t : s.trials()) {
        ids.push_back(t.trial_id);
        pairs.push_back({{t.first.u, t.first.z}, {t.second.u, t.second.z}});
      }
      const auto choices = inference::simulate_observer_mle(pairs, job.model, factory, observer_seed);
      for (std::size_t k = 0; k < ids.size(); ++k) s.record_response(ids[k], experiment::Response{choices[k], 0.0, {}, false});
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mclab::app
