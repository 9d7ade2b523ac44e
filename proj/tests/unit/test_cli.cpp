#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(MCLAB_CLI) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = ::pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workdir {
  fs::path path;
  explicit Workdir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mclab-cli-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_synth_config(const fs::path& file, const char* grid_extra = "") {
  std::ofstream(file) << R"({"params": {"v0": [1.0, 0.0], "theta0": 0.0, "sigma_theta": 0.3, "z0": 2.0,
                                         "sigma_z": 0.4, "sigma_r": 1.0},
                              "grid": {"nx": 32, "ny": 32, "ppd": 16, "fps": 50)"
                      << grid_extra << R"(},
                              "n_frames": 8, "seed": 4})";
}

}  // namespace

TEST_CASE("synth output is byte-identical across runs") {
  Workdir w("synth");
  write_synth_config(w.path / "cfg.json");
  for (const char* out : {"a", "b"}) {
    const Run r = run("synth --config " + (w.path / "cfg.json").string() + " --out " + (w.path / out).string());
    CHECK(r.code == 0);
    CHECK(r.output.find("sigma_I") != std::string::npos);
  }
  int files = 0;
  for (const auto& e : fs::directory_iterator(w.path / "a")) {
    CHECK(slurp(e.path()) == slurp(w.path / "b" / e.path().filename()));
    ++files;
  }
  CHECK(files == 9);

  const Run raw = run("synth --config " + (w.path / "cfg.json").string() + " --format raw --out " +
                      (w.path / "raw").string());
  CHECK(raw.code == 0);
  CHECK(fs::exists(w.path / "raw" / "frames.mcraw"));
}

TEST_CASE("synth rejects an unstable explicit time step") {
  Workdir w("unstable");
  write_synth_config(w.path / "cfg.json", R"(, "delta": 0.02)");
  const Run r = run("synth --config " + (w.path / "cfg.json").string() + " --out " + (w.path / "o").string());
  CHECK(r.code != 0);
  CHECK(r.output.find("maximum admissible delta") != std::string::npos);
  CHECK_FALSE(fs::exists(w.path / "o" / "frame_0000.png"));
}

TEST_CASE("simulate then fit recovers the observer model") {
  Workdir w("fit");
  nlohmann::json conditions = nlohmann::json::array();
  const double dz[] = {-0.48, -0.21, 0.0, 0.32, 0.85};
  for (int i = 0; i < 5; ++i) conditions.push_back({{"z", 1.28 + dz[i]}, {"sigma", 0.25}, {"a", -4.0 - i}});
  const nlohmann::json sim_config = {{"model", {{"conditions", conditions}}},
                                     {"experiment", {{"reps_per_cell", 100}}},
                                     {"sessions", 4}};
  std::ofstream(w.path / "sim.json") << sim_config.dump();
  const Run sim = run("simulate --config " + (w.path / "sim.json").string() + " --out " +
                      (w.path / "sessions").string() + " --seed 3");
  REQUIRE(sim.code == 0);

  const Run fit = run("fit \"" + (w.path / "sessions" / "*.jsonl").string() + "\" --a-zstar -6 --out " +
                      (w.path / "report").string());
  REQUIRE(fit.code == 0);
  const auto report = nlohmann::json::parse(slurp(w.path / "report" / "report.json"));
  REQUIRE(report["conditions"].size() == 1);
  const auto& rec = report["conditions"][0]["recovery"];
  REQUIRE(rec["conditions"].size() == 5);
  const double truth_a[] = {-4, -5, -6, -7, -8};
  for (int i = 0; i < 5; ++i) {
    const auto& e = rec["conditions"][i];
    CHECK(std::abs(e["sigma"].get<double>() - 0.25) < 4 * e["sigma_se"].get<double>());
    CHECK(std::abs(e["a"].get<double>() - truth_a[i]) < 4 * e["a_se"].get<double>());
  }
  CHECK(fs::exists(w.path / "report" / "u5_z1.28_t0.1.csv"));
  CHECK(fs::exists(w.path / "report" / "u5_z1.28_t0.1.plot.json"));

  const Run none = run("fit \"" + (w.path / "nothing" / "*.jsonl").string() + "\" --out " +
                       (w.path / "r2").string());
  CHECK(none.code != 0);
  CHECK(none.output.find("error:") != std::string::npos);
}

TEST_CASE("validate quick passes and reports every suite") {
  Workdir w("validate");
  const Run r = run("validate quick --out " + (w.path / "report.json").string());
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(w.path / "report.json"));
  CHECK(report["passed"] == true);
  CHECK(report["suites"].size() == 9);
  for (const auto& s : report["suites"]) CHECK_MESSAGE(s["passed"] == true, s["id"]);
}

TEST_CASE("validation detects an injected spectral fault") {
  const Run r = run("validate quick --only spectrum-match --fault-nu-scale 0.6");
  CHECK(r.code == 1);
  CHECK(r.output.find("FAIL") != std::string::npos);
}
