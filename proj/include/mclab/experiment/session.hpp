#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mclab/core/params.hpp"
#include "mclab/experiment/config.hpp"
#include "mclab/inference/observer.hpp"

namespace mclab::experiment {

using inference::Choice;

struct Stimulus {
  double u = 0.0;  // deg/s
  double z = 0.0;  // c/deg
  MCParams params;
  std::uint64_t seed = 0;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct Response {
  Choice choice = Choice::first;
  double rt_ms = 0.0;
  std::vector<double> presented_ms;  // client presentation timestamps, if reported
  bool timing_flagged = false;       // client could not honour the frame timing

  friend bool operator==(const Response&, const Response&) = default;
};

/// One 2AFC trial of cell (du, dz): one interval shows (u* + du, z*), the
/// other (u*, z* + dz), in the order given by u_offset_first.
struct TrialRecord {
  int trial_id = 0;
  int iu = 0;  // index into delta_u
  int iz = 0;  // index into delta_z
  double du = 0.0;
  double dz = 0.0;
  bool u_offset_first = true;
  Stimulus first;
  Stimulus second;
  std::optional<Response> response;

  [[nodiscard]] const Stimulus& u_offset_stimulus() const { return u_offset_first ? first : second; }
  [[nodiscard]] const Stimulus& z_offset_stimulus() const { return u_offset_first ? second : first; }

  /// Whether the (u* + du, z*) interval was chosen as faster. Requires a response.
  [[nodiscard]] bool u_offset_judged_faster() const;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// reps_per_cell trials per (du, dz) cell, shuffled by `seed`, with the
/// interval order drawn per trial. Stimulus seeds are derived from `seed`,
/// the trial id and the interval.
std::vector<TrialRecord> build_schedule(const ExperimentConfig& config, std::uint64_t seed);

enum class SessionStatus { open, complete };

/// Append-only record of one observer's session. Not thread-safe; callers
/// serialize access per session.
class Session {
 public:
  Session() = default;
  Session(std::string id, ExperimentConfig config, std::uint64_t seed);
  Session(std::string id, ExperimentConfig config, std::uint64_t seed, std::vector<TrialRecord> trials);

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const ExperimentConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::vector<TrialRecord>& trials() const { return trials_; }
  [[nodiscard]] int n_answered() const { return answered_; }
  [[nodiscard]] SessionStatus status() const {
    return answered_ == static_cast<int>(trials_.size()) ? SessionStatus::complete : SessionStatus::open;
  }

  /// First unanswered trial in schedule order, or nullptr when complete.
  [[nodiscard]] const TrialRecord* next_trial() const;

  /// Throws NotFoundError for an unknown id.
  [[nodiscard]] const TrialRecord& trial(int trial_id) const;

  /// Stores the response. Throws NotFoundError for an unknown trial and
  /// ConflictError if the trial already has one.
  const TrialRecord& record_response(int trial_id, const Response& response);

  friend bool operator==(const Session&, const Session&) = default;

 private:
  std::string id_;
  ExperimentConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<TrialRecord> trials_;
  int answered_ = 0;
};

/// Answers every open trial with the Gaussian-measurement observer.
void respond_with_observer(Session& session, const inference::ObserverModel& model, std::uint64_t seed);

/// JSON Lines: a session header, one line per trial (response inline or
/// null), then any appended response lines.
void write_session(std::ostream& out, const Session& session);
Session read_session(std::istream& in, const std::string& source = "<stream>");

/// Writes to a temporary file in the same directory and renames it into place.
void persist_session(const Session& session, const std::filesystem::path& path);

/// Appends one response line to a persisted session.
void append_response(const std::filesystem::path& path, int trial_id, const Response& response);

/// Throws IoError if the file cannot be read and ParseError (with the line
/// number and the last valid trial) for malformed or truncated content.
Session load_session(const std::filesystem::path& path);

}  // namespace mclab::experiment
