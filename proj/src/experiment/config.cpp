#include "mclab/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "mclab/core/conversions.hpp"
#include "mclab/core/errors.hpp"

namespace mclab::experiment {
namespace {

void check_offsets(const std::vector<double>& offsets, double base, const char* name) {
  if (offsets.empty()) throw ConfigError(std::string("ExperimentConfig: ") + name + " must not be empty");
  std::set<double> seen;
  for (double d : offsets) {
    if (!std::isfinite(d)) throw ConfigError(std::string("ExperimentConfig: ") + name + " must be finite");
    if (!(base + d > 0.0)) {
      std::ostringstream msg;
      msg << "ExperimentConfig: offset " << d << " in " << name << " makes " << base << " + " << d
          << " non-positive";
      throw ConfigError(msg.str());
    }
    if (!seen.insert(d).second) throw ConfigError(std::string("ExperimentConfig: repeated value in ") + name);
  }
}

double number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("ExperimentConfig: '" + key + "' must be a number");
  return v.get<double>();
}

int integer(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("ExperimentConfig: '" + key + "' must be an integer");
  return v.get<int>();
}

std::vector<double> numbers(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("ExperimentConfig: '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, key));
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(z_star > 0.0)) throw ConfigError("ExperimentConfig: z_star must be > 0");
  if (!(u_star > 0.0)) throw ConfigError("ExperimentConfig: u_star must be > 0");
  if (!(t_star > 0.0)) throw ConfigError("ExperimentConfig: t_star must be > 0");
  if (!(d_z > 0.0)) throw ConfigError("ExperimentConfig: d_z must be > 0");
  if (!(sigma_theta > 0.0)) throw ConfigError("ExperimentConfig: sigma_theta must be > 0");
  if (!std::isfinite(theta0)) throw ConfigError("ExperimentConfig: theta0 must be finite");
  if (reps_per_cell < 1) throw ConfigError("ExperimentConfig: reps_per_cell must be >= 1");
  if (stimulus_ms < 1 || isi_ms < 0) throw ConfigError("ExperimentConfig: invalid stimulus or ISI duration");
  check_offsets(delta_u, u_star, "delta_u");
  check_offsets(delta_z, z_star, "delta_z");
}

MCParams stimulus_params(const ExperimentConfig& config, double u, double z) {
  const FzShape shape = convert_mode_std(z, config.d_z);
  MCParams p;
  p.v0 = {u, 0.0};
  p.theta0 = wrap_angle(config.theta0 - std::numbers::pi / 2.0);
  p.sigma_theta = config.sigma_theta;
  p.z0 = shape.z0;
  p.sigma_z = shape.sigma_z;
  p.sigma_r = 1.0 / (config.t_star * shape.z0);
  p.validate();
  return p;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"z_star", c.z_star},   {"u_star", c.u_star},
          {"t_star", c.t_star},   {"delta_u", c.delta_u},
          {"delta_z", c.delta_z}, {"reps_per_cell", c.reps_per_cell},
          {"theta0", c.theta0},   {"sigma_theta", c.sigma_theta},
          {"d_z", c.d_z},         {"stimulus_ms", c.stimulus_ms},
          {"isi_ms", c.isi_ms}};
}

ExperimentConfig config_from_json(const nlohmann::json& overrides, const ExperimentConfig& base) {
  if (overrides.is_null()) {
    base.validate();
    return base;
  }
  if (!overrides.is_object()) throw ConfigError("ExperimentConfig: expected a JSON object");
  ExperimentConfig c = base;
  for (const auto& [key, v] : overrides.items()) {
    if (key == "z_star") c.z_star = number(v, key);
    else if (key == "u_star") c.u_star = number(v, key);
    else if (key == "t_star") c.t_star = number(v, key);
    else if (key == "delta_u") c.delta_u = numbers(v, key);
    else if (key == "delta_z") c.delta_z = numbers(v, key);
    else if (key == "reps_per_cell") c.reps_per_cell = integer(v, key);
    else if (key == "theta0") c.theta0 = number(v, key);
    else if (key == "sigma_theta") c.sigma_theta = number(v, key);
    else if (key == "d_z") c.d_z = number(v, key);
    else if (key == "stimulus_ms") c.stimulus_ms = integer(v, key);
    else if (key == "isi_ms") c.isi_ms = integer(v, key);
    else throw ConfigError("ExperimentConfig: unknown field '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace mclab::experiment
