#include "mclab/core/params_json.hpp"

#include <set>
#include <string>

#include "mclab/core/conversions.hpp"
#include "mclab/core/errors.hpp"

namespace mclab {
namespace {

double number_field(const nlohmann::json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError(std::string("MCParams: missing field '") + key + "'");
  if (!it->is_number()) throw ConfigError(std::string("MCParams: field '") + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

nlohmann::json params_to_json(const MCParams& p) {
  return {{"v0", {p.v0[0], p.v0[1]}}, {"theta0", p.theta0},   {"sigma_theta", p.sigma_theta},
          {"z0", p.z0},               {"sigma_z", p.sigma_z}, {"sigma_r", p.sigma_r}};
}

MCParams params_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("MCParams: expected a JSON object");
  static const std::set<std::string> known = {"v0",      "theta0", "sigma_theta", "z0", "sigma_z",
                                              "sigma_r", "m_z",    "d_z",         "b_z"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ConfigError("MCParams: unknown field '" + key + "'");
  }

  MCParams p;
  const auto v0 = doc.find("v0");
  if (v0 == doc.end() || !v0->is_array() || v0->size() != 2 || !(*v0)[0].is_number() ||
      !(*v0)[1].is_number()) {
    throw ConfigError("MCParams: 'v0' must be a 2-element numeric array");
  }
  p.v0 = {(*v0)[0].get<double>(), (*v0)[1].get<double>()};
  p.theta0 = number_field(doc, "theta0");
  p.sigma_theta = number_field(doc, "sigma_theta");
  p.sigma_r = number_field(doc, "sigma_r");

  const bool direct = doc.contains("z0") || doc.contains("sigma_z");
  const bool mode = doc.contains("m_z");
  const bool has_d = doc.contains("d_z");
  const bool has_b = doc.contains("b_z");
  if (direct && (mode || has_d || has_b)) {
    throw ConfigError("MCParams: (z0, sigma_z) and (m_z, d_z|b_z) are mutually exclusive");
  }
  if (direct) {
    p.z0 = number_field(doc, "z0");
    p.sigma_z = number_field(doc, "sigma_z");
  } else {
    if (!mode) throw ConfigError("MCParams: need (z0, sigma_z), (m_z, d_z) or (m_z, b_z)");
    if (has_d == has_b) throw ConfigError("MCParams: give exactly one of d_z or b_z with m_z");
    try {
      const FzShape s = has_d ? convert_mode_std(number_field(doc, "m_z"), number_field(doc, "d_z"))
                              : convert_octave(number_field(doc, "m_z"), number_field(doc, "b_z"));
      p.z0 = s.z0;
      p.sigma_z = s.sigma_z;
    } catch (const DomainError& e) {
      throw ConfigError(std::string("MCParams: ") + e.what());
    }
  }
  return p.normalized();
}

}  // namespace mclab
