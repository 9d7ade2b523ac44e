#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mclab/core/errors.hpp"
#include "mclab/experiment/aggregate.hpp"
#include "mclab/experiment/config.hpp"
#include "mclab/experiment/session.hpp"
#include "mclab/inference/recovery.hpp"

using namespace mclab;
using namespace mclab::experiment;

namespace {

inference::ObserverModel model_for(const ExperimentConfig& c) {
  inference::ObserverModel m;
  for (double dz : c.delta_z) {
    const double z = c.z_star + dz;
    m.set(z, 0.2 + 0.05 * z, -1.0 - 0.5 * z);
  }
  return m;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mclab_test_experiment";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("default schedule has ten repetitions of each of the 25 cells") {
  const ExperimentConfig cfg;
  const auto trials = build_schedule(cfg, 42);
  REQUIRE(trials.size() == 250);
  std::map<std::pair<int, int>, int> counts;
  for (const auto& t : trials) ++counts[{t.iu, t.iz}];
  CHECK(counts.size() == 25);
  for (const auto& [cell, n] : counts) CHECK(n == 10);
  for (std::size_t i = 0; i < trials.size(); ++i) CHECK(trials[i].trial_id == static_cast<int>(i));
}

TEST_CASE("trial structure and stimulus parameters") {
  ExperimentConfig cfg;
  cfg.t_star = 0.2;
  cfg.u_star = 10.0;
  for (const auto& t : build_schedule(cfg, 7)) {
    const Stimulus& us = t.u_offset_stimulus();
    const Stimulus& zs = t.z_offset_stimulus();
    CHECK(us.u == cfg.u_star + t.du);
    CHECK(us.z == cfg.z_star);
    CHECK(zs.u == cfg.u_star);
    CHECK(zs.z == cfg.z_star + t.dz);
    for (const Stimulus* s : {&t.first, &t.second}) {
      CHECK(std::abs(s->params.sigma_r * s->params.z0 * cfg.t_star - 1.0) <= 4 * std::numeric_limits<double>::epsilon());
      CHECK(s->params.v0[0] == s->u);
      CHECK(s->params.v0[1] == 0.0);
      CHECK(s->params.theta0 == doctest::Approx(0.0));
      CHECK(s->params.sigma_theta == doctest::Approx(std::numbers::pi / 12));
      // Mode of the log-normal envelope equals the nominal frequency.
      CHECK(s->params.z0 / (1.0 + s->params.sigma_z * s->params.sigma_z) == doctest::Approx(s->z).epsilon(1e-10));
    }
    CHECK(t.first.seed != t.second.seed);
  }
}

TEST_CASE("schedule determinism, single repetition and order balance") {
  const ExperimentConfig cfg;
  CHECK(build_schedule(cfg, 3) == build_schedule(cfg, 3));
  CHECK(build_schedule(cfg, 3) != build_schedule(cfg, 4));

  ExperimentConfig one = cfg;
  one.reps_per_cell = 1;
  const auto t1 = build_schedule(one, 1);
  CHECK(t1.size() == 25);
  std::set<std::pair<int, int>> cells;
  for (const auto& t : t1) cells.insert({t.iu, t.iz});
  CHECK(cells.size() == 25);

  ExperimentConfig many = cfg;
  many.reps_per_cell = 400;
  const auto big = build_schedule(many, 5);
  REQUIRE(big.size() == 10000);
  double first = 0.0;
  for (const auto& t : big) first += t.u_offset_first;
  CHECK(std::abs(first / 10000.0 - 0.5) < 3.0 * 0.005);
}

TEST_CASE("configuration validation and JSON overrides") {
  ExperimentConfig cfg;
  cfg.delta_u = {-6.0, 0.0};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("non-positive"), ConfigError);
  cfg = {};
  cfg.delta_z = {-1.28};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(build_schedule(cfg, 1), ConfigError);

  const auto c2 = config_from_json(nlohmann::json{{"u_star", 10.0}, {"reps_per_cell", 2}});
  CHECK(c2.u_star == 10.0);
  CHECK(c2.reps_per_cell == 2);
  CHECK(c2.z_star == 1.28);
  CHECK(config_from_json(config_to_json(c2)) == c2);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"speed", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"reps_per_cell", 1.5}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"u_star", -1.0}}), ConfigError);
}

TEST_CASE("session responses") {
  Session s("abc", ExperimentConfig{}, 11);
  CHECK(s.status() == SessionStatus::open);
  CHECK(s.next_trial()->trial_id == 0);
  s.record_response(0, {Choice::second, 512.0, {}, false});
  CHECK(s.next_trial()->trial_id == 1);
  CHECK_THROWS_AS(s.record_response(0, {Choice::first, 1.0, {}, false}), ConflictError);
  CHECK_THROWS_AS(s.record_response(250, {Choice::first, 1.0, {}, false}), NotFoundError);
  CHECK_THROWS_AS((void)s.trial(-1), NotFoundError);
  s.record_response(5, {Choice::first, 300.0, {}, false});
  CHECK(s.n_answered() == 2);
  for (int i = 0; i < 250; ++i) {
    if (!s.trial(i).response) s.record_response(i, {Choice::first, 1.0, {}, false});
  }
  CHECK(s.status() == SessionStatus::complete);
  CHECK(s.next_trial() == nullptr);
  CHECK_THROWS_AS(s.record_response(3, {Choice::first, 1.0, {}, false}), ConflictError);
}

TEST_CASE("session JSONL round trip") {
  Session s("round", ExperimentConfig{}, 99);
  for (int i = 0; i < 125; ++i) {
    s.record_response(i, {i % 3 ? Choice::first : Choice::second, 400.0 + i / 7.0, {0.0, 10.01, 260.5}, i % 11 == 0});
  }
  const auto path = scratch("round.jsonl");
  persist_session(s, path);
  CHECK(load_session(path) == s);

  append_response(path, 200, {Choice::second, 321.5, {}, false});
  const Session resumed = load_session(path);
  CHECK(resumed.n_answered() == 126);
  CHECK(resumed.trial(200).response->choice == Choice::second);
  CHECK(resumed.next_trial()->trial_id == 125);

  // A repeated response line is a conflict, reported with its line number.
  append_response(path, 200, {Choice::first, 1.0, {}, false});
  CHECK_THROWS_WITH_AS(load_session(path), doctest::Contains(":253:"), ParseError);

  Session empty("empty", ExperimentConfig{}, 1, {});
  const auto epath = scratch("empty.jsonl");
  persist_session(empty, epath);
  const Session back = load_session(epath);
  CHECK(back.trials().empty());
  CHECK(back == empty);
}

TEST_CASE("session loading errors") {
  Session s("trunc", ExperimentConfig{}, 5);
  std::stringstream full;
  write_session(full, s);
  const std::string text = full.str();

  SUBCASE("truncated mid-line") {
    std::istringstream in(text.substr(0, text.size() / 2));
    try {
      (void)read_session(in, "t.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("t.jsonl:") == 0);
      CHECK(msg.find("last valid trial: ") != std::string::npos);
    }
  }
  SUBCASE("missing trailing lines") {
    std::string cut;
    std::istringstream lines(text);
    std::string line;
    for (int i = 0; i < 101 && std::getline(lines, line); ++i) cut += line + "\n";
    std::istringstream in(cut);
    CHECK_THROWS_WITH_AS((void)read_session(in), doctest::Contains("last valid trial: 99"), ParseError);
  }
  SUBCASE("malformed line") {
    std::string broken = text;
    const auto pos = broken.find("\"trial_id\":3,");
    broken.replace(pos, 13, "\"trial_id\":\"x\",");
    std::istringstream in(broken);
    CHECK_THROWS_WITH_AS((void)read_session(in, "b"), doctest::Contains("b:5:"), ParseError);
  }
  SUBCASE("empty input and missing file") {
    std::istringstream in("");
    CHECK_THROWS_AS((void)read_session(in), ParseError);
    CHECK_THROWS_AS((void)load_session("/nonexistent/session.jsonl"), IoError);
  }
}

TEST_CASE("aggregation of a noiseless observer is a step") {
  ExperimentConfig cfg;
  cfg.reps_per_cell = 4;
  Session s("step", cfg, 1);
  inference::ObserverModel m;
  for (double dz : cfg.delta_z) m.set(cfg.z_star + dz, 1e-9, -1.0);
  respond_with_observer(s, m, 2);
  const auto mat = aggregate(s);
  CHECK(mat.n_trials() == 100);
  for (const auto& c : mat.cells) {
    CHECK(c.n == 4);
    if (c.du > 0) CHECK(c.phat == 1.0);
    if (c.du < 0) CHECK(c.phat == 0.0);
  }
}

TEST_CASE("aggregation details") {
  ExperimentConfig cfg;
  cfg.reps_per_cell = 1;
  Session a("a", cfg, 1);
  respond_with_observer(a, model_for(cfg), 3);
  for (const auto& c : aggregate(a).cells) CHECK((c.phat == 0.0 || c.phat == 1.0));

  Session b("b", cfg, 2);
  respond_with_observer(b, model_for(cfg), 4);
  const std::vector<Session> ab{a, b};
  const std::vector<Session> ba{b, a};
  const auto m1 = aggregate(ab);
  const auto m2 = aggregate(ba);
  CHECK(matrix_to_csv(m1) == matrix_to_csv(m2));
  CHECK(m1.n_trials() == 50);

  ExperimentConfig other = cfg;
  other.u_star = 10.0;
  const std::vector<Session> mixed{a, Session("c", other, 1)};
  CHECK_THROWS_AS(aggregate(mixed), ConfigError);

  Session partial("p", cfg, 5);
  partial.record_response(0, {Choice::first, 1.0, {}, true});
  partial.record_response(1, {Choice::first, 1.0, {}, false});
  CHECK(aggregate(partial).n_trials() == 1);
  CHECK(aggregate(partial, {.include_flagged = true}).n_trials() == 2);

  const std::string csv = matrix_to_csv(aggregate(partial));
  CHECK(csv.rfind("du,dz,n,phat\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
}

TEST_CASE("aggregated simulated sessions match the closed form") {
  ExperimentConfig cfg;
  cfg.reps_per_cell = 1000;
  const auto model = model_for(cfg);
  Session s("mc", cfg, 17);
  respond_with_observer(s, model, 18);
  const auto mat = aggregate(s);
  for (const auto& c : mat.cells) {
    const double p = inference::psychometric_theoretical(cfg.u_star + c.du, cfg.z_star + c.dz, cfg.u_star,
                                                         cfg.z_star, model);
    const double sd = std::sqrt(p * (1 - p) / c.n);
    CHECK(std::abs(c.phat - p) < 4.0 * sd + 1e-3);
  }
}

TEST_CASE("fit and recovery from simulated sessions") {
  ExperimentConfig cfg;
  cfg.reps_per_cell = 3000;
  const auto truth = model_for(cfg);
  Session s("fit", cfg, 23);
  respond_with_observer(s, truth, 24);
  const auto fits = fit_matrix(aggregate(s));
  CHECK(fits.failures.empty());
  CHECK(fits.fits.size() == 5);
  const auto rep = inference::recover_prior_likelihood(fits.fits, cfg.z_star, truth.a(cfg.z_star));
  for (const auto& e : rep.entries) {
    CHECK(e.valid);
    CHECK(std::abs(e.sigma / truth.sigma(e.z) - 1.0) < 0.1);
    CHECK(std::abs(e.a / truth.a(e.z) - 1.0) < 0.1);
  }
}
