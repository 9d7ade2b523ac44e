#include "mclab/app/service.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "mclab/app/analysis.hpp"
#include "mclab/core/errors.hpp"
#include "mclab/core/random.hpp"
#include "mclab/experiment/aggregate.hpp"

namespace mclab::app {

namespace {

experiment::Response parse_response(const nlohmann::json& body, int& trial_id) {
  if (!body.is_object()) throw ParseError("response body must be a JSON object");
  static const std::set<std::string> known = {"trial_id", "choice", "rt_ms", "presented_ms", "timing_flagged"};
  for (const auto& [key, value] : body.items()) {
    if (!known.count(key)) throw ParseError("unknown field '" + key + "' in response");
  }
  experiment::Response r;
  try {
    if (!body.contains("trial_id") || !body["trial_id"].is_number_integer()) {
      throw ParseError("trial_id must be an integer");
    }
    trial_id = body["trial_id"].get<int>();
    const auto& choice = body.at("choice");
    if (choice == "first") {
      r.choice = experiment::Choice::first;
    } else if (choice == "second") {
      r.choice = experiment::Choice::second;
    } else {
      throw ParseError("choice must be \"first\" or \"second\"");
    }
    if (body.contains("rt_ms")) {
      if (!body["rt_ms"].is_number()) throw ParseError("rt_ms must be a number");
      r.rt_ms = body["rt_ms"].get<double>();
    }
    if (body.contains("presented_ms")) r.presented_ms = body["presented_ms"].get<std::vector<double>>();
    if (body.contains("timing_flagged")) r.timing_flagged = body["timing_flagged"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed response: ") + e.what());
  }
  if (!std::isfinite(r.rt_ms) || r.rt_ms < 0.0) throw ParseError("rt_ms must be a finite non-negative number");
  return r;
}

std::string hex_id(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

ExperimentService::ExperimentService(AppConfig config)
    : config_((config.validate(), std::move(config))), stimuli_(config_.stimuli_dir()) {
  std::filesystem::create_directories(config_.sessions_dir());
  for (const auto& item : std::filesystem::directory_iterator(config_.sessions_dir())) {
    if (item.path().extension() != ".jsonl") continue;
    auto e = std::make_unique<Entry>();
    e->session = experiment::load_session(item.path());
    e->path = item.path();
    const std::string id = e->session.id();
    if (sessions_.count(id)) throw ConfigError("duplicate session id " + id + " in " + item.path().string());
    sessions_.emplace(id, std::move(e));
  }
}

std::size_t ExperimentService::session_count() const {
  std::shared_lock lock(map_mutex_);
  return sessions_.size();
}

ExperimentService::Entry& ExperimentService::entry(const std::string& id) const {
  std::shared_lock lock(map_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  return *it->second;
}

experiment::Session ExperimentService::session(const std::string& id) const {
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  return e.session;
}

std::string ExperimentService::create_session(const nlohmann::json& overrides) {
  const experiment::ExperimentConfig protocol =
      experiment::config_from_json(overrides.is_null() ? nlohmann::json::object() : overrides, config_.experiment);
  std::unique_lock lock(map_mutex_);
  std::uint64_t seed = 0;
  std::string id;
  do {
    seed = splitmix64(config_.master_seed ^ splitmix64(created_++));
    id = hex_id(seed);
  } while (sessions_.count(id));
  auto e = std::make_unique<Entry>();
  e->session = experiment::Session(id, protocol, seed);
  e->path = config_.sessions_dir() / (id + ".jsonl");
  experiment::persist_session(e->session, e->path);
  sessions_.emplace(id, std::move(e));
  return id;
}

nlohmann::json ExperimentService::next_trial(const std::string& id) {
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  const experiment::TrialRecord* t = e.session.next_trial();
  if (!t) return {{"done", true}};
  const auto& c = e.session.config();
  const std::string a = stimuli_.add(make_stimulus_spec(t->first.params, config_.grid, t->first.seed, c.stimulus_ms));
  const std::string b =
      stimuli_.add(make_stimulus_spec(t->second.params, config_.grid, t->second.seed, c.stimulus_ms));
  return {{"trial_id", t->trial_id},
          {"stim_a", a},
          {"stim_b", b},
          {"stimulus_ms", c.stimulus_ms},
          {"isi_ms", c.isi_ms},
          {"index", e.session.n_answered()},
          {"n_trials", e.session.trials().size()}};
}

nlohmann::json ExperimentService::record_response(const std::string& id, const nlohmann::json& body) {
  int trial_id = -1;
  const experiment::Response r = parse_response(body, trial_id);
  Entry& e = entry(id);
  std::lock_guard lock(e.mutex);
  if (e.session.trial(trial_id).response) {
    throw ConflictError("trial " + std::to_string(trial_id) + " of session " + id + " is already answered");
  }
  experiment::append_response(e.path, trial_id, r);
  e.session.record_response(trial_id, r);
  return {{"accepted", true},
          {"trial_id", trial_id},
          {"n_answered", e.session.n_answered()},
          {"done", e.session.status() == experiment::SessionStatus::complete}};
}

nlohmann::json ExperimentService::results(const std::string& id) {
  const experiment::Session s = session(id);
  const bool complete = s.status() == experiment::SessionStatus::complete;
  nlohmann::json doc = {{"session_id", id},
                        {"status", complete ? "complete" : "open"},
                        {"n_trials", s.trials().size()},
                        {"n_answered", s.n_answered()},
                        {"config", experiment::config_to_json(s.config())},
                        {"aggregate", nullptr},
                        {"fit", nullptr}};
  if (s.n_answered() > 0) doc["aggregate"] = experiment::matrix_to_json(experiment::aggregate(s));
  if (complete && s.n_answered() > 0) doc["fit"] = analysis_to_json(analyze_matrix(experiment::aggregate(s), std::nullopt));
  return doc;
}

}  // namespace mclab::app
