#include "mclab/app/analysis.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "mclab/core/errors.hpp"
#include "mclab/inference/report_json.hpp"

namespace mclab::app {

ConditionAnalysis analyze_matrix(const experiment::PsychometricMatrix& matrix, std::optional<double> a_zstar,
                                 const inference::FitOptions& options) {
  ConditionAnalysis out;
  out.matrix = matrix;
  out.fits = experiment::fit_matrix(matrix, options);
  try {
    out.recovery = inference::recover_prior_likelihood(out.fits.fits, matrix.z_star, a_zstar);
  } catch (const Error& e) {
    out.recovery_error = e.what();
  }
  return out;
}

std::vector<ConditionAnalysis> analyze_sessions(std::span<const experiment::Session> sessions,
                                                std::optional<double> a_zstar,
                                                const experiment::AggregateOptions& aggregate_options,
                                                const inference::FitOptions& fit_options) {
  std::map<std::tuple<double, double, double>, std::vector<experiment::Session>> groups;
  for (const auto& s : sessions) {
    if (s.n_answered() == 0) continue;
    const auto& c = s.config();
    groups[{c.u_star, c.z_star, c.t_star}].push_back(s);
  }
  if (groups.empty()) throw ConfigError("no session has recorded responses");
  std::vector<ConditionAnalysis> out;
  for (const auto& [key, group] : groups) {
    out.push_back(analyze_matrix(experiment::aggregate(group, aggregate_options), a_zstar, fit_options));
  }
  return out;
}

nlohmann::json analysis_to_json(const ConditionAnalysis& a) {
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& [z, fit] : a.fits.fits) fits.push_back(inference::fit_to_json(fit));
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [z, msg] : a.fits.failures) failures.push_back({{"z", z}, {"error", msg}});
  nlohmann::json doc = {{"condition", {{"u_star", a.matrix.u_star}, {"z_star", a.matrix.z_star}, {"t_star", a.matrix.t_star}}},
                        {"matrix", experiment::matrix_to_json(a.matrix)},
                        {"fits", fits},
                        {"fit_failures", failures}};
  if (a.recovery) {
    doc["recovery"] = inference::recovery_to_json(*a.recovery);
  } else {
    doc["recovery"] = nullptr;
    doc["recovery_error"] = a.recovery_error;
  }
  return doc;
}

nlohmann::json plot_data(const ConditionAnalysis& a, int n_points) {
  const auto& m = a.matrix;
  const double ref = inference::log_speed(m.u_star);
  double lo = inference::log_speed(m.u_star + *std::min_element(m.delta_u.begin(), m.delta_u.end())) - ref;
  double hi = inference::log_speed(m.u_star + *std::max_element(m.delta_u.begin(), m.delta_u.end())) - ref;
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  std::vector<double> grid(n_points);
  std::vector<double> speeds(n_points);
  for (int i = 0; i < n_points; ++i) {
    grid[i] = lo + (hi - lo) * i / (n_points - 1);
    speeds[i] = inference::speed_from_log(grid[i] + ref);
  }
  nlohmann::json curves = nlohmann::json::array();
  for (std::size_t iz = 0; iz < m.delta_z.size(); ++iz) {
    const double z = m.z_star + m.delta_z[iz];
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : experiment::matrix_points(m, static_cast<int>(iz))) {
      points.push_back({{"u_tilde", p.x}, {"n", p.n}, {"k", p.k},
                        {"phat", p.n > 0 ? nlohmann::json(double(p.k) / p.n) : nlohmann::json(nullptr)}});
    }
    nlohmann::json curve = {{"z", z}, {"dz", m.delta_z[iz]}, {"empirical", points}};
    if (auto it = a.fits.fits.find(z); it != a.fits.fits.end()) {
      std::vector<double> p(n_points);
      for (int i = 0; i < n_points; ++i) p[i] = inference::psi((grid[i] - it->second.mu) / it->second.lam);
      curve["fitted"] = p;
      curve["mu"] = it->second.mu;
      curve["lambda"] = it->second.lam;
    } else {
      curve["fitted"] = nullptr;
    }
    curves.push_back(curve);
  }
  return {{"condition", {{"u_star", m.u_star}, {"z_star", m.z_star}, {"t_star", m.t_star}}},
          {"u_tilde_grid", grid},
          {"speed_grid", speeds},
          {"curves", curves}};
}

std::string condition_label(const experiment::PsychometricMatrix& m) {
  std::ostringstream out;
  out << 'u' << m.u_star << "_z" << m.z_star << "_t" << m.t_star;
  return out.str();
}

}  // namespace mclab::app
