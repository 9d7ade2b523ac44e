#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

#include "mclab/core/params.hpp"
#include "mclab/synth/ar2.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::app {

/// One `mclab synth` run.
struct SynthJob {
  MCParams params;
  synth::GridSpec grid;
  bool auto_delta = true;         // pick the AR step; false keeps grid.delta (stability errors surface)
  int n_frames = 100;
  std::uint64_t seed = 0;
  bool stationary_start = false;  // exact stationary draw instead of the default warm-up
  std::string format = "png";     // "png" or "raw"
};

/// Keys: params (required), grid, n_frames, seed, start ("warmup" | "stationary"),
/// format. The AR step is automatic unless grid.delta is given.
SynthJob synth_job_from_json(const nlohmann::json& doc);

struct SynthSummary {
  double sigma_i = 0.0;         // quantization scale: stationary pixel std
  double seconds = 0.0;         // synthesis time, excluding file output
  double frames_per_second = 0.0;
  int substeps = 1;
  synth::GridSpec grid;         // grid actually used
  std::filesystem::path output;
};

/// Synthesizes the job and writes PNG frames + meta.json into `out` (a
/// directory), or `out`/frames.mcraw + sidecar for format "raw".
SynthSummary run_synth(const SynthJob& job, const std::filesystem::path& out, const synth::SynthOptions& fault = {});

}  // namespace mclab::app
