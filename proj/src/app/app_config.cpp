#include "mclab/app/app_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "mclab/core/errors.hpp"

namespace mclab::app {

void AppConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("AppConfig: port must lie in [0, 65535]");
  if (cache_dir.empty()) throw ConfigError("AppConfig: cache_dir is empty");
  grid.validate();
  experiment.validate();
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  if (ec) throw IoError("AppConfig: cannot create cache directory " + cache_dir.string() + ": " + ec.message());
  const auto probe = cache_dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!(out << "ok")) throw IoError("AppConfig: cache directory " + cache_dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
  if (!static_dir.empty() && !std::filesystem::is_directory(static_dir)) {
    throw ConfigError("AppConfig: static_dir " + static_dir.string() + " is not a directory");
  }
}

AppConfig app_config_from_json(const nlohmann::json& doc, AppConfig base) {
  if (!doc.is_object()) throw ConfigError("AppConfig: expected a JSON object");
  static const std::set<std::string> known = {"port", "cache_dir", "static_dir", "grid", "experiment", "master_seed"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("AppConfig: unknown field '" + key + "'");
  }
  try {
    if (doc.contains("port")) base.port = doc["port"].get<int>();
    if (doc.contains("cache_dir")) base.cache_dir = doc["cache_dir"].get<std::string>();
    if (doc.contains("static_dir")) base.static_dir = doc["static_dir"].get<std::string>();
    if (doc.contains("master_seed")) base.master_seed = doc["master_seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("AppConfig: ") + e.what());
  }
  if (doc.contains("grid")) base.grid = synth::grid_from_json(doc["grid"]);
  if (doc.contains("experiment")) base.experiment = experiment::config_from_json(doc["experiment"], base.experiment);
  return base;
}

nlohmann::json app_config_to_json(const AppConfig& c) {
  return {{"port", c.port},
          {"cache_dir", c.cache_dir.string()},
          {"static_dir", c.static_dir.string()},
          {"grid", synth::grid_to_json(c.grid)},
          {"experiment", experiment::config_to_json(c.experiment)},
          {"master_seed", c.master_seed}};
}

AppConfig load_app_config(const std::filesystem::path& path) {
  AppConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    config = app_config_from_json(doc, config);
  }
  if (const char* env = std::getenv("MCLAB_CACHE"); env && *env) config.cache_dir = env;
  return config;
}

}  // namespace mclab::app
