#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <glob.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mclab/app/analysis.hpp"
#include "mclab/app/app_config.hpp"
#include "mclab/app/http.hpp"
#include "mclab/app/simulate.hpp"
#include "mclab/app/synth_job.hpp"
#include "mclab/app/validation.hpp"
#include "mclab/core/errors.hpp"
#include "mclab/synth/measure.hpp"
#include "mclab/synth/spectral.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mclab::IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw mclab::ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!(out << text)) throw mclab::IoError("cannot write " + path.string());
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  return paths;
}

struct SynthArgs {
  std::string config;
  std::string out;
  std::string format;
  int frames = 0;
  std::optional<std::uint64_t> seed;
  bool stationary = false;
};

int cmd_synth(const SynthArgs& a) {
  mclab::app::SynthJob job = mclab::app::synth_job_from_json(read_json(a.config));
  if (!a.format.empty()) job.format = a.format;
  if (a.frames > 0) job.n_frames = a.frames;
  if (a.seed) job.seed = *a.seed;
  if (a.stationary) job.stationary_start = true;
  const auto s = mclab::app::run_synth(job, a.out);
  std::printf("wrote %d frames (%dx%d, %s) to %s\n", job.n_frames, s.grid.nx, s.grid.ny, job.format.c_str(),
              s.output.string().c_str());
  std::printf("sigma_I = %.9g\n", s.sigma_i);
  std::printf("delta = %.9g s (%d steps per frame)\n", s.grid.step(), s.substeps);
  std::printf("synthesis: %.3f s, %.1f frames/s (target %.1f fps)\n", s.seconds, s.frames_per_second, s.grid.fps);
  return 0;
}

struct SpectrumArgs {
  std::string config;
  std::string out;
  int seeds = 20;
  int frames = 64;
  std::uint64_t seed = 0;
};

int cmd_spectrum(const SpectrumArgs& a) {
  const mclab::app::SynthJob job = mclab::app::synth_job_from_json(read_json(a.config));
  const auto grid = job.auto_delta ? mclab::synth::with_auto_delta(job.params, job.grid) : job.grid;
  std::vector<mclab::synth::FrameStack> ar, sp;
  const mclab::synth::SpectralSynth reference(job.params, grid, a.frames);
  for (int i = 0; i < a.seeds; ++i) {
    ar.push_back(mclab::synth::synth_stream(job.params, grid, a.frames, a.seed + i, true));
    sp.push_back(reference.sample(a.seed + a.seeds + i));
  }
  const auto ref = mclab::synth::analytic_spectrum(job.params, grid, a.frames, mclab::RadialKind::spde_exact);
  const double e_ar = mclab::synth::relative_l2_on_band(mclab::synth::periodogram(ar), ref);
  const double e_sp = mclab::synth::relative_l2_on_band(mclab::synth::periodogram(sp), ref);
  const json report = {{"grid", mclab::synth::grid_to_json(grid)},
                       {"n_frames", a.frames},
                       {"seeds", a.seeds},
                       {"band_fraction", 0.01},
                       {"relative_l2", {{"ar2", e_ar}, {"spectral", e_sp}}},
                       {"noise_floor", 1.0 / std::sqrt(static_cast<double>(a.seeds))}};
  std::printf("relative L2 vs analytic spectrum: AR(2) %.4f, Fourier %.4f (noise floor ~%.3f)\n", e_ar, e_sp,
              1.0 / std::sqrt(static_cast<double>(a.seeds)));
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  return 0;
}

struct ValidateArgs {
  std::string level = "quick";
  std::string out;
  std::vector<std::string> only;
  double fault_nu_scale = 1.0;
  double fault_noise_gain = 1.0;
};

int cmd_validate(const ValidateArgs& a) {
  mclab::app::ValidationOptions options;
  options.level = a.level == "full" ? mclab::app::ValidationLevel::full : mclab::app::ValidationLevel::quick;
  options.only = a.only;
  options.fault.nu_scale = a.fault_nu_scale;
  options.fault.noise_gain = a.fault_noise_gain;
  const auto results = mclab::app::run_validation(options, [](const mclab::app::SuiteResult& r) {
    std::printf("%s %s: %s [%.1f s]\n", r.passed ? "PASS" : "FAIL", r.id.c_str(), r.detail.c_str(), r.seconds);
    std::fflush(stdout);
  });
  const json report = mclab::app::validation_report(results, options.level);
  if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
  return report["passed"].get<bool>() ? 0 : 1;
}

struct SimulateArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto job = mclab::app::simulation_job_from_json(read_json(a.config));
  fs::create_directories(a.out);
  for (const auto& s : mclab::app::simulate_sessions(job, a.seed)) {
    const fs::path path = fs::path(a.out) / (s.id() + ".jsonl");
    mclab::experiment::persist_session(s, path);
    std::printf("%s (%zu trials)\n", path.string().c_str(), s.trials().size());
  }
  return 0;
}

struct FitArgs {
  std::string sessions;
  std::string a_zstar = "auto";
  std::string out;
  bool include_flagged = false;
};

int cmd_fit(const FitArgs& a) {
  std::optional<double> a_zstar;
  if (a.a_zstar != "auto") {
    try {
      std::size_t used = 0;
      a_zstar = std::stod(a.a_zstar, &used);
      if (used != a.a_zstar.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw mclab::ConfigError("--a-zstar must be 'auto' or a number, got '" + a.a_zstar + "'");
    }
  }
  const auto paths = expand_glob(a.sessions);
  if (paths.empty()) throw mclab::ConfigError("no session files match '" + a.sessions + "'");
  std::vector<mclab::experiment::Session> sessions;
  for (const auto& p : paths) sessions.push_back(mclab::experiment::load_session(p));
  mclab::experiment::AggregateOptions agg;
  agg.include_flagged = a.include_flagged;
  const auto analyses = mclab::app::analyze_sessions(sessions, a_zstar, agg);

  const fs::path out(a.out);
  fs::create_directories(out);
  json conditions = json::array();
  for (const auto& an : analyses) {
    const std::string label = mclab::app::condition_label(an.matrix);
    json doc = mclab::app::analysis_to_json(an);
    doc["matrix_csv"] = label + ".csv";
    doc["plot_data"] = label + ".plot.json";
    conditions.push_back(doc);
    write_text(out / (label + ".csv"), mclab::experiment::matrix_to_csv(an.matrix));
    write_text(out / (label + ".plot.json"), mclab::app::plot_data(an).dump(2) + "\n");
    std::printf("%s: %d trials, %zu fits, %zu failures%s\n", label.c_str(), an.matrix.n_trials(), an.fits.fits.size(),
                an.fits.failures.size(), an.recovery ? "" : (", no recovery: " + an.recovery_error).c_str());
    if (an.recovery) {
      for (const auto& e : an.recovery->entries) {
        std::printf("  z = %-6g sigma = %-10.4g a = %-10.4g%s\n", e.z, e.sigma, e.a, e.valid ? "" : "  (invalid)");
      }
    }
  }
  const json report = {{"sessions", paths.size()},
                       {"a_zstar", a_zstar ? json(*a_zstar) : json("auto")},
                       {"include_flagged", a.include_flagged},
                       {"conditions", conditions}};
  write_text(out / "report.json", report.dump(2) + "\n");
  std::printf("report: %s\n", (out / "report.json").string().c_str());
  return 0;
}

struct ServeArgs {
  std::string config;
  int port = -1;
  std::optional<std::uint64_t> seed;
  std::string host = "0.0.0.0";
};

int cmd_serve(const ServeArgs& a) {
  mclab::app::AppConfig config = mclab::app::load_app_config(a.config);
  if (a.port >= 0) config.port = a.port;
  if (a.seed) config.master_seed = *a.seed;
  mclab::app::ExperimentService service(config);
  httplib::Server server;
  mclab::app::register_routes(server, service);
  int port = config.port;
  if (port == 0) {
    port = server.bind_to_any_port(a.host);
  } else if (!server.bind_to_port(a.host, port)) {
    throw mclab::IoError("cannot bind " + a.host + ":" + std::to_string(port));
  }
  std::printf("serving on http://%s:%d (cache %s, %zu sessions loaded)\n", a.host.c_str(), port,
              config.cache_dir.string().c_str(), service.session_count());
  std::fflush(stdout);
  server.listen_after_bind();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion Cloud synthesis, validation and psychophysics toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Stream a Motion Cloud to PNG frames or a raw float32 stack");
  s->add_option("--config", synth.config, "Synthesis config (params, grid, n_frames, seed, start, format)")->required();
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--format", synth.format, "png or raw (overrides the config)")->check(CLI::IsMember({"png", "raw"}));
  s->add_option("--frames", synth.frames, "Number of frames (overrides the config)")->check(CLI::PositiveNumber);
  s->add_option("--seed", synth.seed, "RNG seed (overrides the config)");
  s->add_flag("--stationary", synth.stationary, "Start from an exact stationary draw instead of warming up");

  SpectrumArgs spectrum;
  auto* sp = app.add_subcommand("spectrum", "Compare ensemble periodograms with the analytic spectrum");
  sp->add_option("--config", spectrum.config, "Synthesis config (params, grid)")->required();
  sp->add_option("--out", spectrum.out, "JSON report path");
  sp->add_option("--seeds", spectrum.seeds, "Ensemble size")->check(CLI::PositiveNumber);
  sp->add_option("--frames", spectrum.frames, "Frames per stack")->check(CLI::PositiveNumber);
  sp->add_option("--seed", spectrum.seed, "First seed");

  ValidateArgs validate;
  auto* v = app.add_subcommand("validate", "Run the validation suites");
  v->add_option("level,--level", validate.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  v->add_option("--out", validate.out, "JSON report path");
  v->add_option("--only", validate.only, "Run only these suites")->check(CLI::IsMember(mclab::app::suite_ids()));
  v->add_option("--fault-nu-scale", validate.fault_nu_scale, "Test hook: scale every relaxation time of the AR engine");
  v->add_option("--fault-noise-gain", validate.fault_noise_gain, "Test hook: scale the AR driving noise");

  SimulateArgs simulate;
  auto* sim = app.add_subcommand("simulate", "Simulate observer sessions from a known model");
  sim->add_option("--config", simulate.config, "Simulation config (model, experiment, sessions, observer)")->required();
  sim->add_option("--out", simulate.out, "Directory for the session files")->required();
  sim->add_option("--seed", simulate.seed, "RNG seed");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit psychometric curves and recover the observer model");
  f->add_option("sessions,--sessions", fit.sessions, "Glob of session JSONL files")->required();
  f->add_option("--a-zstar", fit.a_zstar, "Prior slope at the reference frequency, or 'auto'");
  f->add_option("--out", fit.out, "Output directory")->required();
  f->add_flag("--include-flagged", fit.include_flagged, "Keep trials whose presentation timing was flagged");

  ServeArgs serve;
  auto* srv = app.add_subcommand("serve", "Run the experiment HTTP service");
  srv->add_option("--config", serve.config, "Service config (port, cache_dir, grid, experiment, master_seed)");
  srv->add_option("--port", serve.port, "Port (overrides the config; 0 picks a free port)")->check(CLI::Range(0, 65535));
  srv->add_option("--seed", serve.seed, "Master seed (overrides the config)");
  srv->add_option("--host", serve.host, "Bind address");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*s) return cmd_synth(synth);
    if (*sp) return cmd_spectrum(spectrum);
    if (*v) return cmd_validate(validate);
    if (*sim) return cmd_simulate(simulate);
    if (*f) return cmd_fit(fit);
    if (*srv) return cmd_serve(serve);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
