#include "mclab/app/synth_job.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "mclab/core/errors.hpp"
#include "mclab/core/params_json.hpp"
#include "mclab/synth/frame_io.hpp"

namespace mclab::app {

SynthJob synth_job_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("synth config: expected a JSON object");
  static const std::set<std::string> known = {"params", "grid", "n_frames", "seed", "start", "format"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("synth config: unknown field '" + key + "'");
  }
  SynthJob job;
  if (!doc.contains("params")) throw ConfigError("synth config: missing 'params'");
  job.params = params_from_json(doc["params"]);
  if (doc.contains("grid")) {
    job.grid = synth::grid_from_json(doc["grid"]);
    job.auto_delta = !doc["grid"].contains("delta");
  }
  try {
    if (doc.contains("n_frames")) job.n_frames = doc["n_frames"].get<int>();
    if (doc.contains("seed")) job.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("format")) job.format = doc["format"].get<std::string>();
    if (doc.contains("start")) {
      const auto start = doc["start"].get<std::string>();
      if (start != "warmup" && start != "stationary") throw ConfigError("synth config: start must be warmup or stationary");
      job.stationary_start = start == "stationary";
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  if (job.n_frames < 1) throw ConfigError("synth config: n_frames must be >= 1");
  if (job.format != "png" && job.format != "raw") throw ConfigError("synth config: format must be png or raw");
  return job;
}

SynthSummary run_synth(const SynthJob& job, const std::filesystem::path& out, const synth::SynthOptions& fault) {
  SynthSummary s;
  s.grid = job.auto_delta ? synth::with_auto_delta(job.params, job.grid) : job.grid;
  s.substeps = s.grid.substeps();

  const auto t0 = std::chrono::steady_clock::now();
  synth::Ar2Synth engine(job.params, s.grid, job.seed, fault);
  if (job.stationary_start) {
    engine.start_stationary();
  } else {
    engine.warm_up();
  }
  synth::FrameStack stack(s.grid, job.params.normalized(), job.seed, job.n_frames);
  for (int t = 0; t < job.n_frames; ++t) engine.step_into(stack.frame(t));
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  s.frames_per_second = s.seconds > 0.0 ? job.n_frames / s.seconds : 0.0;

  synth::Quantization q;
  q.sigma_i = std::sqrt(engine.stationary_pixel_variance());
  s.sigma_i = q.sigma_i;
  if (job.format == "png") {
    synth::write_png_frames(out, stack, q);
    s.output = out;
  } else {
    std::filesystem::create_directories(out);
    s.output = out / "frames.mcraw";
    synth::write_mcraw(s.output, stack, q);
  }
  return s;
}

}  // namespace mclab::app
