#include <doctest.h>
#include <httplib.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <filesystem>
#include <fstream>
#include <thread>

#include "mclab/app/analysis.hpp"
#include "mclab/app/app_config.hpp"
#include "mclab/app/http.hpp"
#include "mclab/app/service.hpp"
#include "mclab/app/simulate.hpp"
#include "mclab/app/stimulus_cache.hpp"
#include "mclab/app/synth_job.hpp"
#include "mclab/app/validation.hpp"
#include "mclab/core/errors.hpp"
#include "mclab/experiment/aggregate.hpp"
#include "mclab/inference/report_json.hpp"
#include "mclab/synth/frame_io.hpp"

using namespace mclab;
using namespace mclab::app;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("mclab-test-app-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

AppConfig small_config(const fs::path& cache) {
  AppConfig c;
  c.cache_dir = cache;
  c.grid = synth::GridSpec{32, 32, 8.0, 100.0, 0.0};
  c.port = 0;
  return c;
}

nlohmann::json answer(int trial_id, const char* choice = "first") {
  return {{"trial_id", trial_id}, {"choice", choice}, {"rt_ms", 512.5}};
}

inference::ObserverModel known_model() {
  inference::ObserverModel m;
  const experiment::ExperimentConfig c;
  for (std::size_t i = 0; i < c.delta_z.size(); ++i) m.set(c.z_star + c.delta_z[i], 0.25, -4.0 - 1.0 * i);
  return m;
}

}  // namespace

TEST_CASE("app config parsing, validation and environment") {
  TempDir tmp;
  const AppConfig c = app_config_from_json({{"port", 9000},
                                            {"cache_dir", (tmp.path / "c").string()},
                                            {"grid", {{"nx", 64}, {"ny", 64}}},
                                            {"experiment", {{"reps_per_cell", 2}}},
                                            {"master_seed", 5}});
  CHECK(c.port == 9000);
  CHECK(c.grid.nx == 64);
  CHECK(c.experiment.reps_per_cell == 2);
  CHECK(c.experiment.u_star == 5.0);
  CHECK(c.master_seed == 5);
  CHECK_NOTHROW(c.validate());
  CHECK(fs::is_directory(tmp.path / "c"));
  CHECK(app_config_from_json(app_config_to_json(c)).experiment == c.experiment);

  CHECK_THROWS_AS(app_config_from_json({{"prot", 1}}), ConfigError);
  CHECK_THROWS_AS(app_config_from_json({{"experiment", {{"reps_per_cell", 0}}}}), ConfigError);
  AppConfig bad = c;
  bad.port = 70000;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const fs::path file = tmp.path / "app.json";
  std::ofstream(file) << R"({"port": 1234, "cache_dir": "from-file"})";
  ::setenv("MCLAB_CACHE", (tmp.path / "env").c_str(), 1);
  const AppConfig loaded = load_app_config(file);
  ::unsetenv("MCLAB_CACHE");
  CHECK(loaded.port == 1234);
  CHECK(loaded.cache_dir == tmp.path / "env");
  CHECK(load_app_config(file).cache_dir == "from-file");
  CHECK_THROWS_AS(load_app_config(tmp.path / "missing.json"), IoError);
}

TEST_CASE("stimulus cache keys, sizes and bitwise-stable hits") {
  TempDir tmp;
  const experiment::ExperimentConfig protocol;
  const MCParams p = experiment::stimulus_params(protocol, 5.0, 1.28);
  const synth::GridSpec g{32, 32, 8.0, 100.0, 0.0};
  const StimulusSpec spec = make_stimulus_spec(p, g, 99, protocol.stimulus_ms);
  CHECK(spec.n_frames == 25);
  CHECK(spec.grid.substeps() >= 1);
  CHECK(stimulus_id(spec) == stimulus_id(make_stimulus_spec(p, g, 99, 250)));
  CHECK(stimulus_id(spec) != stimulus_id(make_stimulus_spec(p, g, 100, 250)));
  CHECK(stimulus_spec_from_json(stimulus_spec_to_json(spec)) == spec);

  StimulusCache cache(tmp.path);
  const std::string id = cache.add(spec);
  CHECK(id.size() == 16);
  const std::string first = cache.frames(id);
  CHECK(first.size() == static_cast<std::size_t>(spec.n_frames) * 32 * 32);
  CHECK(cache.frames(id) == first);
  const auto meta = cache.meta(id);
  CHECK(meta["width"] == 32);
  CHECK(meta["height"] == 32);
  CHECK(meta["n_frames"] == 25);
  CHECK(meta["fps"] == 100.0);
  CHECK(meta["quantization"]["gain"] == 48.0);
  CHECK_FALSE(meta.contains("spec"));

  // A fresh cache finds the rendered stimulus by id alone.
  StimulusCache reopened(tmp.path);
  CHECK(reopened.frames(id) == first);
  CHECK_THROWS_AS(reopened.frames("0123456789abcdef"), NotFoundError);
  CHECK_THROWS_AS(reopened.meta("../etc/passwd"), NotFoundError);

  // Concurrent first requests of one id agree byte for byte.
  TempDir other;
  StimulusCache racy(other.path);
  const std::string id2 = racy.add(make_stimulus_spec(p, g, 7, 250));
  std::vector<std::string> bodies(4);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back([&, i] { bodies[i] = racy.frames(id2); });
  for (auto& t : threads) t.join();
  for (const auto& b : bodies) CHECK(b == bodies[0]);
  const auto direct = render_stimulus(make_stimulus_spec(p, g, 7, 250));
  CHECK(bodies[0] == std::string(direct.frames.begin(), direct.frames.end()));
}

TEST_CASE("service: a default session exhausts after exactly 250 trials") {
  TempDir tmp;
  ExperimentService service(small_config(tmp.path));
  const std::string id = service.create_session(nlohmann::json::object());
  std::set<int> seen;
  for (int k = 0; k < 250; ++k) {
    const auto next = service.next_trial(id);
    REQUIRE_FALSE(next.contains("done"));
    CHECK(next["stimulus_ms"] == 250);
    CHECK(next["isi_ms"] == 250);
    CHECK(next["stim_a"] != next["stim_b"]);
    const int trial = next["trial_id"];
    CHECK(seen.insert(trial).second);
    const auto ack = service.record_response(id, answer(trial, k % 2 ? "first" : "second"));
    CHECK(ack["accepted"] == true);
  }
  CHECK(service.next_trial(id) == nlohmann::json{{"done", true}});
  const auto results = service.results(id);
  CHECK(results["status"] == "complete");
  CHECK(results["n_answered"] == 250);
  CHECK(results["aggregate"]["n_trials"] == 250);
  CHECK_FALSE(results["fit"].is_null());
}

TEST_CASE("service: errors, conflicts and overrides") {
  TempDir tmp;
  ExperimentService service(small_config(tmp.path));
  const std::string id = service.create_session({{"reps_per_cell", 2}});
  CHECK(service.session(id).trials().size() == 50);
  const int trial = service.next_trial(id)["trial_id"];

  CHECK(service.record_response(id, answer(trial))["n_answered"] == 1);
  CHECK_THROWS_AS(service.record_response(id, answer(trial, "second")), ConflictError);
  CHECK_THROWS_AS(service.record_response(id, answer(999)), NotFoundError);
  CHECK_THROWS_AS(service.record_response("missing", answer(0)), NotFoundError);
  CHECK_THROWS_AS(service.next_trial("missing"), NotFoundError);
  CHECK_THROWS_AS(service.results("missing"), NotFoundError);
  CHECK_THROWS_AS(service.record_response(id, {{"trial_id", 1}, {"choice", "left"}}), ParseError);
  CHECK_THROWS_AS(service.record_response(id, {{"trial_id", "1"}, {"choice", "first"}}), ParseError);
  CHECK_THROWS_AS(service.record_response(id, {{"trial_id", 1}, {"choice", "first"}, {"extra", 1}}), ParseError);
  CHECK_THROWS_AS(service.create_session({{"reps_per_cell", -1}}), ConfigError);
  CHECK_THROWS_AS(service.create_session({{"colour", 1}}), ConfigError);

  const auto open = service.results(id);
  CHECK(open["status"] == "open");
  CHECK(open["fit"].is_null());
  CHECK(open["aggregate"]["n_trials"] == 1);

  // Presentation timestamps and the timing flag are stored.
  const int t2 = service.next_trial(id)["trial_id"];
  service.record_response(id, {{"trial_id", t2}, {"choice", "second"}, {"rt_ms", 300},
                               {"presented_ms", {0.0, 10.1, 20.3}}, {"timing_flagged", true}});
  const auto& r = *service.session(id).trial(t2).response;
  CHECK(r.timing_flagged);
  CHECK(r.presented_ms.size() == 3);
}

TEST_CASE("service: restart resumes at the next unanswered trial") {
  TempDir tmp;
  std::string id;
  std::vector<int> answered;
  int expected_next = -1;
  {
    ExperimentService service(small_config(tmp.path));
    id = service.create_session(nlohmann::json::object());
    service.create_session(nlohmann::json::object());
    for (int k = 0; k < 10; ++k) {
      const int t = service.next_trial(id)["trial_id"];
      service.record_response(id, answer(t));
      answered.push_back(t);
    }
    expected_next = service.next_trial(id)["trial_id"];
  }
  ExperimentService restarted(small_config(tmp.path));
  CHECK(restarted.session_count() == 2);
  CHECK(restarted.session(id).n_answered() == 10);
  CHECK(restarted.next_trial(id)["trial_id"] == expected_next);
  CHECK_THROWS_AS(restarted.record_response(id, answer(answered.front())), ConflictError);
  const std::string third = restarted.create_session(nlohmann::json::object());
  CHECK(third != id);
  CHECK(restarted.session_count() == 3);
}

TEST_CASE("service: session ids follow the master seed") {
  TempDir a, b, c;
  AppConfig ca = small_config(a.path), cb = small_config(b.path), cc = small_config(c.path);
  cc.master_seed = 2;
  ExperimentService sa(ca), sb(cb), sc(cc);
  const auto ia = sa.create_session({}), ib = sb.create_session({}), ic = sc.create_session({});
  CHECK(ia == ib);
  CHECK(ia != ic);
  CHECK(sa.session(ia) == sb.session(ib));
}

TEST_CASE("HTTP API end to end") {
  TempDir tmp;
  ExperimentService service(small_config(tmp.path));
  httplib::Server server;
  register_routes(server, service);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);

  auto created = client.Post("/api/sessions", R"({"reps_per_cell": 1})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = nlohmann::json::parse(created->body)["session_id"];

  auto next = client.Get("/api/sessions/" + id + "/trials/next");
  REQUIRE(next);
  CHECK(next->status == 200);
  const auto trial = nlohmann::json::parse(next->body);
  for (const char* key : {"trial_id", "stim_a", "stim_b", "stimulus_ms", "isi_ms"}) CHECK(trial.contains(key));

  const std::string stim = trial["stim_a"];
  auto meta = client.Get("/api/stimuli/" + stim + "/meta");
  REQUIRE(meta);
  CHECK(meta->status == 200);
  const auto m = nlohmann::json::parse(meta->body);
  auto frames = client.Get("/api/stimuli/" + stim + "/frames");
  REQUIRE(frames);
  CHECK(frames->status == 200);
  CHECK(frames->get_header_value("Content-Type") == "application/octet-stream");
  CHECK(frames->body.size() == m["n_frames"].get<std::size_t>() * m["height"].get<std::size_t>() *
                                   m["width"].get<std::size_t>());
  auto again = client.Get("/api/stimuli/" + stim + "/frames");
  REQUIRE(again);
  CHECK(again->body == frames->body);

  const std::string body = nlohmann::json{{"trial_id", trial["trial_id"]}, {"choice", "first"}, {"rt_ms", 640}}.dump();
  auto ok = client.Post("/api/sessions/" + id + "/responses", body, "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  CHECK(nlohmann::json::parse(ok->body)["accepted"] == true);
  auto dup = client.Post("/api/sessions/" + id + "/responses", body, "application/json");
  REQUIRE(dup);
  CHECK(dup->status == 409);

  auto bad = client.Post("/api/sessions/" + id + "/responses", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto missing = client.Get("/api/sessions/nope/trials/next");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto missing_stim = client.Get("/api/stimuli/ffffffffffffffff/frames");
  REQUIRE(missing_stim);
  CHECK(missing_stim->status == 404);

  for (;;) {
    auto n = client.Get("/api/sessions/" + id + "/trials/next");
    const auto j = nlohmann::json::parse(n->body);
    if (j.contains("done")) break;
    client.Post("/api/sessions/" + id + "/responses",
                nlohmann::json{{"trial_id", j["trial_id"]}, {"choice", "second"}, {"rt_ms", 1}}.dump(),
                "application/json");
  }
  auto results = client.Get("/api/sessions/" + id + "/results");
  REQUIRE(results);
  CHECK(results->status == 200);
  const auto r = nlohmann::json::parse(results->body);
  CHECK(r["status"] == "complete");
  CHECK(r["n_answered"] == 25);

  server.stop();
  loop.join();
}

TEST_CASE("analysis: AUTO vs explicit a* share fits, conditions are kept apart") {
  experiment::ExperimentConfig c;
  c.reps_per_cell = 400;
  experiment::Session s("a", c, 3);
  experiment::respond_with_observer(s, known_model(), 4);
  const auto matrix = experiment::aggregate(s);
  const auto automatic = analyze_matrix(matrix, std::nullopt);
  const auto explicit_ = analyze_matrix(matrix, -1.0);
  REQUIRE(automatic.recovery);
  REQUIRE(explicit_.recovery);
  for (const auto& [z, fit] : automatic.fits.fits) {
    CHECK(fit.mu == explicit_.fits.fits.at(z).mu);
    CHECK(fit.lam == explicit_.fits.fits.at(z).lam);
  }
  bool differs = false;
  for (std::size_t i = 0; i < automatic.recovery->entries.size(); ++i) {
    CHECK(automatic.recovery->entries[i].sigma == doctest::Approx(explicit_.recovery->entries[i].sigma));
    differs = differs || std::abs(automatic.recovery->entries[i].a - explicit_.recovery->entries[i].a) > 1e-6;
  }
  CHECK(differs);
  CHECK(explicit_.recovery->a_zstar == -1.0);

  experiment::ExperimentConfig slow = c;
  slow.u_star = 3.0;
  slow.delta_u = {-1.0, -0.5, 0.0, 0.5, 1.0};
  experiment::ExperimentConfig brief = c;
  brief.t_star = 0.05;
  std::vector<experiment::Session> sessions{s, experiment::Session("b", slow, 5), experiment::Session("c", brief, 6),
                                            experiment::Session("d", c, 7)};
  for (std::size_t i = 1; i < sessions.size(); ++i) experiment::respond_with_observer(sessions[i], known_model(), 10 + i);
  const auto groups = analyze_sessions(sessions, std::nullopt);
  REQUIRE(groups.size() == 3);
  int total = 0;
  for (const auto& g : groups) total += g.matrix.n_trials();
  CHECK(total == 4 * c.n_cells() * c.reps_per_cell);
  std::set<std::string> labels;
  for (const auto& g : groups) labels.insert(condition_label(g.matrix));
  CHECK(labels.size() == 3);
  CHECK(labels.count("u5_z1.28_t0.1"));

  const auto plot = plot_data(automatic, 51);
  CHECK(plot["u_tilde_grid"].size() == 51);
  CHECK(plot["curves"].size() == 5);
  CHECK(plot["curves"][0]["fitted"].size() == 51);
  CHECK(plot["curves"][0]["empirical"].size() == 5);
  const auto doc = analysis_to_json(automatic);
  CHECK(doc["fits"].size() == 5);
  CHECK(doc["recovery"]["a_zstar_source"] == "auto_min_sum_squares");

  experiment::Session empty("e", c, 1);
  CHECK_THROWS_AS(analyze_sessions(std::span(&empty, 1), std::nullopt), ConfigError);
}

TEST_CASE("synth job: config parsing, PNG/raw agreement and stability errors") {
  TempDir tmp;
  const nlohmann::json doc = {{"params", {{"v0", {1.0, 0.0}}, {"theta0", 0.0}, {"sigma_theta", 0.3}, {"z0", 2.0},
                                          {"sigma_z", 0.4}, {"sigma_r", 1.0}}},
                              {"grid", {{"nx", 32}, {"ny", 32}, {"ppd", 16}, {"fps", 50}}},
                              {"n_frames", 12},
                              {"seed", 3}};
  SynthJob job = synth_job_from_json(doc);
  CHECK(job.auto_delta);
  CHECK(job.n_frames == 12);
  job.format = "png";
  const auto png = run_synth(job, tmp.path / "png");
  job.format = "raw";
  const auto raw = run_synth(job, tmp.path / "raw");
  CHECK(png.sigma_i == raw.sigma_i);
  CHECK(png.substeps > 1);

  const auto stack = synth::read_mcraw(raw.output);
  const auto bytes = synth::quantize(stack.stack, stack.quantization);
  for (int t = 0; t < 12; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", t);
    const auto img = synth::read_png_gray(tmp.path / "png" / name);
    CHECK(std::equal(img.pixels.begin(), img.pixels.end(), bytes.begin() + t * 32 * 32));
  }

  nlohmann::json unstable = doc;
  unstable["grid"]["delta"] = 0.02;
  const SynthJob bad = synth_job_from_json(unstable);
  CHECK_FALSE(bad.auto_delta);
  try {
    run_synth(bad, tmp.path / "bad");
    FAIL("expected a stability error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("maximum admissible delta") != std::string::npos);
  }
  nlohmann::json unknown = doc;
  unknown["colour"] = 1;
  CHECK_THROWS_AS(synth_job_from_json(unknown), ConfigError);
  nlohmann::json no_params = doc;
  no_params.erase("params");
  CHECK_THROWS_AS(synth_job_from_json(no_params), ConfigError);
  nlohmann::json bad_format = doc;
  bad_format["format"] = "gif";
  CHECK_THROWS_AS(synth_job_from_json(bad_format), ConfigError);
}

TEST_CASE("simulation jobs with the Gaussian and the MLE-backed observer") {
  const nlohmann::json model = inference::model_to_json(known_model());
  SimulationJob job = simulation_job_from_json({{"model", model}, {"experiment", {{"reps_per_cell", 2}}}, {"sessions", 2}});
  const auto sessions = simulate_sessions(job, 9);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].id() != sessions[1].id());
  CHECK(sessions[0].status() == experiment::SessionStatus::complete);
  CHECK(simulate_sessions(job, 9) == sessions);

  CHECK_THROWS_AS(simulation_job_from_json({{"model", model}, {"observer", "oracle"}}), ConfigError);
  CHECK_THROWS_AS(simulation_job_from_json({{"model", model}, {"experiment", {{"z_star", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(simulation_job_from_json({{"experiment", {}}}), ConfigError);

  SimulationJob mle = simulation_job_from_json(
      {{"model", model}, {"experiment", {{"reps_per_cell", 1}}}, {"observer", "mle"},
       {"mle_grid", {{"nx", 16}, {"ny", 16}, {"ppd", 8}, {"fps", 100}}}});
  const auto answered = simulate_sessions(mle, 1);
  CHECK(answered[0].n_answered() == 25);

  const MCParams p = experiment::stimulus_params(experiment::ExperimentConfig{}, 5.0, 2.13);
  const auto g = mle_stimulus_grid(p, mle.mle_grid);
  CHECK(g.substeps() == 1);
  CHECK(std::fmod(g.fps, 100.0) == 0.0);
}

TEST_CASE("validation registry") {
  const auto& ids = suite_ids();
  CHECK(ids.size() == 9);
  for (const char* id : {"closed-form-identity", "spde-equivalence", "spectrum-match", "shot-noise", "psychometric-monte-carlo",
                         "bayesian-round-trip", "mle-estimator", "protocol-counts", "determinism"}) {
    CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
  }
  ValidationOptions o;
  o.only = {"no-such-suite"};
  CHECK_THROWS_AS(run_validation(o), ConfigError);

  o.only = {"closed-form-identity", "protocol-counts"};
  const auto results = run_validation(o);
  REQUIRE(results.size() == 2);
  CHECK(results[0].passed);
  CHECK(results[1].passed);
  const auto report = validation_report(results, ValidationLevel::quick);
  CHECK(report["passed"] == true);
  CHECK(report["suites"][1]["id"] == "protocol-counts");
}
