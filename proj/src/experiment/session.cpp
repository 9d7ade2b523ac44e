#include "mclab/experiment/session.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "mclab/core/errors.hpp"
#include "mclab/core/params_json.hpp"
#include "mclab/core/random.hpp"

namespace mclab::experiment {
namespace {

std::uint64_t stimulus_seed(std::uint64_t seed, int trial_id, int interval) {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(trial_id) * 2 + interval));
}

const char* choice_name(Choice c) { return c == Choice::first ? "first" : "second"; }

nlohmann::json response_to_json(const Response& r) {
  return {{"choice", choice_name(r.choice)},
          {"rt_ms", r.rt_ms},
          {"presented_ms", r.presented_ms},
          {"timing_flagged", r.timing_flagged}};
}

nlohmann::json stimulus_to_json(const Stimulus& s) {
  return {{"u", s.u}, {"z", s.z}, {"seed", s.seed}, {"params", params_to_json(s.params)}};
}

nlohmann::json trial_to_json(const TrialRecord& t) {
  return {{"type", "trial"},
          {"trial_id", t.trial_id},
          {"iu", t.iu},
          {"iz", t.iz},
          {"du", t.du},
          {"dz", t.dz},
          {"u_offset_first", t.u_offset_first},
          {"first", stimulus_to_json(t.first)},
          {"second", stimulus_to_json(t.second)},
          {"response", t.response ? response_to_json(*t.response) : nlohmann::json(nullptr)}};
}

// Field access that throws ParseError; the caller adds the line context.
const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get(const nlohmann::json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type");
  }
}

Response response_from_json(const nlohmann::json& j) {
  Response r;
  const auto choice = get<std::string>(j, "choice");
  if (choice == "first") {
    r.choice = Choice::first;
  } else if (choice == "second") {
    r.choice = Choice::second;
  } else {
    throw ParseError("choice must be \"first\" or \"second\", got \"" + choice + "\"");
  }
  r.rt_ms = get<double>(j, "rt_ms");
  if (j.contains("presented_ms")) r.presented_ms = get<std::vector<double>>(j, "presented_ms");
  if (j.contains("timing_flagged")) r.timing_flagged = get<bool>(j, "timing_flagged");
  return r;
}

Stimulus stimulus_from_json(const nlohmann::json& j) {
  Stimulus s;
  s.u = get<double>(j, "u");
  s.z = get<double>(j, "z");
  s.seed = get<std::uint64_t>(j, "seed");
  try {
    s.params = params_from_json(field(j, "params"));
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return s;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord t;
  t.trial_id = get<int>(j, "trial_id");
  t.iu = get<int>(j, "iu");
  t.iz = get<int>(j, "iz");
  t.du = get<double>(j, "du");
  t.dz = get<double>(j, "dz");
  t.u_offset_first = get<bool>(j, "u_offset_first");
  t.first = stimulus_from_json(field(j, "first"));
  t.second = stimulus_from_json(field(j, "second"));
  if (const auto& r = field(j, "response"); !r.is_null()) t.response = response_from_json(r);
  return t;
}

}  // namespace

bool TrialRecord::u_offset_judged_faster() const {
  if (!response) throw ConflictError("trial " + std::to_string(trial_id) + " has no response");
  return (response->choice == Choice::first) == u_offset_first;
}

std::vector<TrialRecord> build_schedule(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::pair<int, int>> cells;
  for (int rep = 0; rep < config.reps_per_cell; ++rep) {
    for (int iz = 0; iz < static_cast<int>(config.delta_z.size()); ++iz) {
      for (int iu = 0; iu < static_cast<int>(config.delta_u.size()); ++iu) cells.emplace_back(iu, iz);
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(cells.begin(), cells.end(), rng);
  std::bernoulli_distribution coin(0.5);

  std::vector<TrialRecord> trials;
  trials.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    TrialRecord t;
    t.trial_id = static_cast<int>(i);
    t.iu = cells[i].first;
    t.iz = cells[i].second;
    t.du = config.delta_u[t.iu];
    t.dz = config.delta_z[t.iz];
    t.u_offset_first = coin(rng);
    Stimulus u_var;
    u_var.u = config.u_star + t.du;
    u_var.z = config.z_star;
    Stimulus z_var;
    z_var.u = config.u_star;
    z_var.z = config.z_star + t.dz;
    u_var.params = stimulus_params(config, u_var.u, u_var.z);
    z_var.params = stimulus_params(config, z_var.u, z_var.z);
    t.first = t.u_offset_first ? u_var : z_var;
    t.second = t.u_offset_first ? z_var : u_var;
    t.first.seed = stimulus_seed(seed, t.trial_id, 0);
    t.second.seed = stimulus_seed(seed, t.trial_id, 1);
    trials.push_back(t);
  }
  return trials;
}

Session::Session(std::string id, ExperimentConfig config, std::uint64_t seed)
    : id_(std::move(id)), config_(std::move(config)), seed_(seed), trials_(build_schedule(config_, seed)) {}

Session::Session(std::string id, ExperimentConfig config, std::uint64_t seed, std::vector<TrialRecord> trials)
    : id_(std::move(id)), config_(std::move(config)), seed_(seed), trials_(std::move(trials)) {
  for (std::size_t i = 0; i < trials_.size(); ++i) {
    if (trials_[i].trial_id != static_cast<int>(i)) {
      throw ParseError("session " + id_ + ": trial ids must be 0..n-1 in order");
    }
    answered_ += trials_[i].response.has_value();
  }
}

const TrialRecord* Session::next_trial() const {
  for (const auto& t : trials_) {
    if (!t.response) return &t;
  }
  return nullptr;
}

const TrialRecord& Session::trial(int trial_id) const {
  if (trial_id < 0 || trial_id >= static_cast<int>(trials_.size())) {
    throw NotFoundError("session " + id_ + ": no trial " + std::to_string(trial_id));
  }
  return trials_[trial_id];
}

const TrialRecord& Session::record_response(int trial_id, const Response& response) {
  (void)trial(trial_id);
  TrialRecord& t = trials_[trial_id];
  if (t.response) {
    throw ConflictError("session " + id_ + ": trial " + std::to_string(trial_id) + " already answered");
  }
  t.response = response;
  ++answered_;
  return t;
}

void respond_with_observer(Session& session, const inference::ObserverModel& model, std::uint64_t seed) {
  std::vector<int> open;
  std::vector<inference::TrialPair> pairs;
  for (const auto& t : session.trials()) {
    if (t.response) continue;
    open.push_back(t.trial_id);
    pairs.push_back({{t.first.u, t.first.z}, {t.second.u, t.second.z}});
  }
  const auto choices = inference::simulate_observer(pairs, model, seed);
  for (std::size_t i = 0; i < open.size(); ++i) session.record_response(open[i], Response{choices[i], 0.0, {}, false});
}

void write_session(std::ostream& out, const Session& s) {
  const nlohmann::json header = {{"type", "session"},
                                 {"format", 1},
                                 {"session_id", s.id()},
                                 {"seed", s.seed()},
                                 {"n_trials", s.trials().size()},
                                 {"config", config_to_json(s.config())}};
  out << header.dump() << '\n';
  for (const auto& t : s.trials()) out << trial_to_json(t).dump() << '\n';
}

Session read_session(std::istream& in, const std::string& source) {
  std::string line;
  int line_no = 0;
  int last_trial = -1;
  auto fail = [&](const std::string& what) -> ParseError {
    std::ostringstream msg;
    msg << source << ":" << line_no << ": " << what << " (last valid trial: ";
    if (last_trial < 0) {
      msg << "none";
    } else {
      msg << last_trial;
    }
    msg << ")";
    return ParseError(msg.str());
  };
  auto parse_line = [&]() {
    try {
      return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw fail("malformed JSON line");
    }
  };

  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("empty file, expected a session header");
  }
  ++line_no;
  const auto header = parse_line();
  std::string id;
  std::uint64_t seed = 0;
  std::size_t n_trials = 0;
  ExperimentConfig config;
  try {
    if (get<std::string>(header, "type") != "session") throw ParseError("first line must be the session header");
    if (get<int>(header, "format") != 1) throw ParseError("unsupported session format");
    id = get<std::string>(header, "session_id");
    seed = get<std::uint64_t>(header, "seed");
    n_trials = get<std::size_t>(header, "n_trials");
    config = config_from_json(field(header, "config"));
  } catch (const Error& e) {
    throw fail(e.what());
  }

  std::vector<TrialRecord> trials;
  std::vector<std::pair<int, Response>> appended;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = parse_line();
    try {
      const auto type = get<std::string>(j, "type");
      if (type == "trial") {
        if (!appended.empty()) throw ParseError("trial line after response lines");
        TrialRecord t = trial_from_json(j);
        if (t.trial_id != static_cast<int>(trials.size())) {
          throw ParseError("expected trial " + std::to_string(trials.size()) + ", got " + std::to_string(t.trial_id));
        }
        trials.push_back(std::move(t));
        last_trial = trials.back().trial_id;
      } else if (type == "response") {
        appended.emplace_back(get<int>(j, "trial_id"), response_from_json(field(j, "response")));
      } else {
        throw ParseError("unknown line type '" + type + "'");
      }
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  if (trials.size() != n_trials) {
    throw fail("truncated session: header announces " + std::to_string(n_trials) + " trials, found " +
               std::to_string(trials.size()));
  }
  Session s(id, config, seed, std::move(trials));
  for (const auto& [trial_id, r] : appended) {
    try {
      s.record_response(trial_id, r);
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return s;
}

void persist_session(const Session& session, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    write_session(out, session);
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void append_response(const std::filesystem::path& path, int trial_id, const Response& response) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  const nlohmann::json line = {{"type", "response"}, {"trial_id", trial_id}, {"response", response_to_json(response)}};
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw IoError("append failed for " + path.string());
}

Session load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open session file " + path.string());
  return read_session(in, path.string());
}

}  // namespace mclab::experiment
