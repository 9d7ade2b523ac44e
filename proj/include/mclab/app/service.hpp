#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "mclab/app/app_config.hpp"
#include "mclab/app/stimulus_cache.hpp"
#include "mclab/experiment/session.hpp"

namespace mclab::app {

/// Experiment API independent of the transport. Sessions live in memory and
/// in <cache>/sessions/<id>.jsonl; a new instance on the same cache resumes
/// them. Distinct sessions proceed concurrently, calls on one session are
/// serialized.
class ExperimentService {
 public:
  /// Validates the config and loads every persisted session.
  explicit ExperimentService(AppConfig config);

  /// Protocol = config defaults with `overrides` applied. Returns the new id.
  std::string create_session(const nlohmann::json& overrides);

  /// {trial_id, stim_a, stim_b, stimulus_ms, isi_ms} or {done: true}.
  nlohmann::json next_trial(const std::string& session_id);

  /// Body {trial_id, choice: "first"|"second", rt_ms, [presented_ms], [timing_flagged]}.
  /// Throws ParseError on malformed bodies, NotFoundError, ConflictError.
  nlohmann::json record_response(const std::string& session_id, const nlohmann::json& body);

  /// Progress and aggregate; the fit report is added once the session is complete.
  nlohmann::json results(const std::string& session_id);

  nlohmann::json stimulus_meta(const std::string& stimulus_id) { return stimuli_.meta(stimulus_id); }
  std::string stimulus_frames(const std::string& stimulus_id) { return stimuli_.frames(stimulus_id); }

  [[nodiscard]] const AppConfig& config() const { return config_; }
  [[nodiscard]] std::size_t session_count() const;

  /// Snapshot of one session.
  [[nodiscard]] experiment::Session session(const std::string& session_id) const;

 private:
  struct Entry {
    std::mutex mutex;
    experiment::Session session;
    std::filesystem::path path;
  };

  Entry& entry(const std::string& session_id) const;

  AppConfig config_;
  StimulusCache stimuli_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::uint64_t created_ = 0;
};

}  // namespace mclab::app
