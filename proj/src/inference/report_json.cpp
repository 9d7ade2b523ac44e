#include "mclab/inference/report_json.hpp"

#include <cmath>

#include "mclab/core/errors.hpp"

namespace mclab::inference {
namespace {

// JSON has no inf or nan; both map to null.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double required(const nlohmann::json& doc, const char* key, const char* what) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_number()) {
    throw ConfigError(std::string(what) + ": field '" + key + "' must be a number");
  }
  return it->get<double>();
}

}  // namespace

nlohmann::json model_to_json(const ObserverModel& model) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const auto& [z, s] : model.sigma_by_z) {
    conditions.push_back({{"z", z}, {"sigma", s}, {"a", model.a(z)}});
  }
  return {{"u_max", model.u_max}, {"u0", kU0}, {"conditions", conditions}};
}

ObserverModel model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("ObserverModel: expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "u_max" && key != "u0" && key != "conditions") {
      throw ConfigError("ObserverModel: unknown field '" + key + "'");
    }
  }
  ObserverModel m;
  if (doc.contains("u_max")) m.u_max = required(doc, "u_max", "ObserverModel");
  if (doc.contains("u0") && required(doc, "u0", "ObserverModel") != kU0) {
    throw ConfigError("ObserverModel: u0 is fixed at 0.3 deg/s");
  }
  const auto it = doc.find("conditions");
  if (it == doc.end() || !it->is_array() || it->empty()) {
    throw ConfigError("ObserverModel: 'conditions' must be a non-empty array");
  }
  for (const auto& c : *it) {
    if (!c.is_object()) throw ConfigError("ObserverModel: each condition must be an object");
    m.set(required(c, "z", "ObserverModel condition"), required(c, "sigma", "ObserverModel condition"),
          required(c, "a", "ObserverModel condition"));
  }
  m.validate();
  return m;
}

nlohmann::json fit_to_json(const PsychometricFit& fit) {
  return {{"condition",
           {{"z", fit.condition.z},
            {"z_star", fit.condition.z_star},
            {"u_star", fit.condition.u_star},
            {"t_star", fit.condition.t_star}}},
          {"mu", fit.mu},
          {"lam", fit.lam},
          {"mu_se", number(fit.mu_se)},
          {"lam_se", number(fit.lam_se)},
          {"n_trials", fit.n_trials},
          {"log_likelihood", fit.log_likelihood},
          {"deviance", fit.deviance},
          {"lam_at_floor", fit.lam_at_floor}};
}

nlohmann::json recovery_to_json(const RecoveryReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j = {{"z", e.z},
                        {"sigma", number(e.sigma)},
                        {"a", number(e.a)},
                        {"sigma_se", number(e.sigma_se)},
                        {"a_se", number(e.a_se)},
                        {"valid", e.valid}};
    if (!e.note.empty()) j["note"] = e.note;
    entries.push_back(j);
  }
  return {{"z_star", report.z_star},
          {"a_zstar", report.a_zstar},
          {"a_zstar_source", report.a_zstar_auto ? "auto_min_sum_squares" : "explicit"},
          {"u_max", report.model.u_max},
          {"conditions", entries},
          {"warnings", report.warnings}};
}

nlohmann::json mle_to_json(const MleReport& report) {
  return {{"u_hat", report.u_hat},
          {"coeffs", report.coeffs},
          {"expansion_speed", report.expansion_speed},
          {"provenance", report.provenance == MleProvenance::interior_root ? "interior_root" : "boundary"},
          {"candidates", report.candidates},
          {"energy", report.energy},
          {"bins_used", report.bins_used},
          {"frames_used", report.frames_used}};
}

}  // namespace mclab::inference
