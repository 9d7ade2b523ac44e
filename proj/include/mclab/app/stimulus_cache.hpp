#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "mclab/core/params.hpp"
#include "mclab/synth/frame_io.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::app {

/// Everything that determines the bytes of a served stimulus.
struct StimulusSpec {
  MCParams params;
  synth::GridSpec grid;  // delta already resolved
  std::uint64_t seed = 0;
  int n_frames = 0;

  friend bool operator==(const StimulusSpec&, const StimulusSpec&) = default;
};

/// Spec of a stimulus shown for `duration_ms` on `base`, with the AR step
/// chosen for the parameters.
StimulusSpec make_stimulus_spec(const MCParams& params, const synth::GridSpec& base, std::uint64_t seed,
                                int duration_ms);

nlohmann::json stimulus_spec_to_json(const StimulusSpec& spec);
StimulusSpec stimulus_spec_from_json(const nlohmann::json& doc);

/// 16 hex digits of FNV-1a over the canonical JSON of the spec.
std::string stimulus_id(const StimulusSpec& spec);

struct RenderedStimulus {
  std::vector<std::uint8_t> frames;  // n_frames x height x width, frame-major, row-major
  synth::Quantization quantization;
};

/// Streams the spec from a stationary start and quantizes with
/// sigma_i = stationary pixel standard deviation.
RenderedStimulus render_stimulus(const StimulusSpec& spec);

/// On-disk stimulus cache keyed by stimulus_id. Frames are rendered on first
/// request; files are written under a temporary name and renamed into place,
/// so concurrent renders of one id are harmless and hits are bitwise stable.
class StimulusCache {
 public:
  explicit StimulusCache(std::filesystem::path dir);

  /// Makes the id known to this cache and returns it.
  std::string add(const StimulusSpec& spec);

  /// {width, height, n_frames, fps, quantization, ...}. Throws NotFoundError.
  nlohmann::json meta(const std::string& id);

  /// Frame bytes. Throws NotFoundError for ids neither registered nor on disk.
  std::string frames(const std::string& id);

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  StimulusSpec lookup(const std::string& id);
  void ensure(const std::string& id);

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, StimulusSpec> specs_;
};

}  // namespace mclab::app
