#include "mclab/app/stimulus_cache.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <thread>

#include "mclab/core/errors.hpp"
#include "mclab/core/params_json.hpp"
#include "mclab/synth/ar2.hpp"

namespace mclab::app {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
      throw IoError("cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

bool valid_id(const std::string& id) {
  if (id.size() != 16) return false;
  for (char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

StimulusSpec make_stimulus_spec(const MCParams& params, const synth::GridSpec& base, std::uint64_t seed,
                                int duration_ms) {
  StimulusSpec spec;
  spec.params = params.normalized();
  spec.grid = synth::with_auto_delta(spec.params, base);
  spec.seed = seed;
  spec.n_frames = static_cast<int>(std::lround(duration_ms * spec.grid.fps / 1000.0));
  if (spec.n_frames < 1) throw ConfigError("stimulus duration is shorter than one frame");
  return spec;
}

nlohmann::json stimulus_spec_to_json(const StimulusSpec& s) {
  return {{"params", params_to_json(s.params)},
          {"grid", synth::grid_to_json(s.grid)},
          {"seed", s.seed},
          {"n_frames", s.n_frames}};
}

StimulusSpec stimulus_spec_from_json(const nlohmann::json& doc) {
  StimulusSpec s;
  try {
    s.params = params_from_json(doc.at("params"));
    s.grid = synth::grid_from_json(doc.at("grid"));
    s.seed = doc.at("seed").get<std::uint64_t>();
    s.n_frames = doc.at("n_frames").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stimulus spec: ") + e.what());
  }
  return s;
}

std::string stimulus_id(const StimulusSpec& spec) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : stimulus_spec_to_json(spec).dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RenderedStimulus render_stimulus(const StimulusSpec& spec) {
  synth::Ar2Synth engine(spec.params, spec.grid, spec.seed);
  engine.start_stationary();
  RenderedStimulus out;
  out.quantization.sigma_i = std::sqrt(engine.stationary_pixel_variance());
  const std::size_t frame = static_cast<std::size_t>(spec.grid.nx) * spec.grid.ny;
  out.frames.resize(frame * spec.n_frames);
  std::vector<double> buf(frame);
  for (int t = 0; t < spec.n_frames; ++t) {
    engine.step_into(buf);
    for (std::size_t i = 0; i < frame; ++i) out.frames[t * frame + i] = synth::quantize_sample(buf[i], out.quantization);
  }
  return out;
}

StimulusCache::StimulusCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create stimulus cache " + dir_.string() + ": " + ec.message());
}

std::string StimulusCache::add(const StimulusSpec& spec) {
  std::string id = stimulus_id(spec);
  std::lock_guard lock(mutex_);
  specs_.emplace(id, spec);
  return id;
}

StimulusSpec StimulusCache::lookup(const std::string& id) {
  if (!valid_id(id)) throw NotFoundError("unknown stimulus " + id);
  {
    std::lock_guard lock(mutex_);
    if (auto it = specs_.find(id); it != specs_.end()) return it->second;
  }
  const auto sidecar = dir_ / (id + ".json");
  if (!std::filesystem::exists(sidecar)) throw NotFoundError("unknown stimulus " + id);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(sidecar));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(sidecar.string() + ": " + e.what());
  }
  StimulusSpec spec = stimulus_spec_from_json(doc.at("spec"));
  std::lock_guard lock(mutex_);
  specs_.emplace(id, spec);
  return spec;
}

void StimulusCache::ensure(const std::string& id) {
  const StimulusSpec spec = lookup(id);
  const auto frames_path = dir_ / (id + ".u8");
  const auto sidecar = dir_ / (id + ".json");
  if (std::filesystem::exists(frames_path) && std::filesystem::exists(sidecar)) return;
  const RenderedStimulus r = render_stimulus(spec);
  const nlohmann::json meta = {{"stimulus_id", id},
                               {"width", spec.grid.nx},
                               {"height", spec.grid.ny},
                               {"n_frames", spec.n_frames},
                               {"fps", spec.grid.fps},
                               {"ppd", spec.grid.ppd},
                               {"quantization",
                                {{"sigma_i", r.quantization.sigma_i},
                                 {"gain", r.quantization.gain},
                                 {"offset", r.quantization.offset}}},
                               {"spec", stimulus_spec_to_json(spec)}};
  write_atomic(frames_path, std::string(r.frames.begin(), r.frames.end()));
  write_atomic(sidecar, meta.dump());
}

nlohmann::json StimulusCache::meta(const std::string& id) {
  ensure(id);
  nlohmann::json doc = nlohmann::json::parse(read_file(dir_ / (id + ".json")));
  doc.erase("spec");
  return doc;
}

std::string StimulusCache::frames(const std::string& id) {
  ensure(id);
  return read_file(dir_ / (id + ".u8"));
}

}  // namespace mclab::app
