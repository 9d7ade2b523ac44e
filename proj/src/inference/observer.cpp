#include "mclab/inference/observer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab::inference {
namespace {

std::map<double, double>::const_iterator find_z(const std::map<double, double>& table, double z) {
  auto it = table.lower_bound(z * (1.0 - 1e-9) - 1e-12);
  if (it != table.end() && std::abs(it->first - z) <= 1e-9 * std::max(1.0, std::abs(z))) return it;
  return table.end();
}

}  // namespace

double psi(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double log_psi(double t) {
  if (t > -30.0) return std::log(psi(t));
  // Asymptotic series of the Mills ratio.
  const double t2 = t * t;
  const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
  return -0.5 * t2 - std::log(-t) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double log_speed(double u) {
  if (!(u > -kU0)) {
    std::ostringstream msg;
    msg << "log_speed: u=" << u << " must exceed -" << kU0 << " deg/s";
    throw DomainError(msg.str());
  }
  return std::log1p(u / kU0);
}

double speed_from_log(double s) { return kU0 * std::expm1(s); }

double ObserverModel::sigma(double z) const {
  const auto it = find_z(sigma_by_z, z);
  if (it == sigma_by_z.end()) throw DomainError("ObserverModel: no sigma at z=" + std::to_string(z));
  return it->second;
}

double ObserverModel::a(double z) const {
  const auto it = find_z(a_by_z, z);
  if (it == a_by_z.end()) throw DomainError("ObserverModel: no prior slope at z=" + std::to_string(z));
  return it->second;
}

bool ObserverModel::defined_at(double z) const {
  return find_z(sigma_by_z, z) != sigma_by_z.end() && find_z(a_by_z, z) != a_by_z.end();
}

void ObserverModel::set(double z, double sigma_z, double a_z) {
  if (auto it = find_z(sigma_by_z, z); it != sigma_by_z.end()) z = it->first;
  sigma_by_z[z] = sigma_z;
  a_by_z[z] = a_z;
}

void ObserverModel::validate() const {
  if (!(u_max > 0.0)) throw ConfigError("ObserverModel: u_max must be > 0");
  for (const auto& [z, s] : sigma_by_z) {
    if (!(s > 0.0)) throw ConfigError("ObserverModel: sigma at z=" + std::to_string(z) + " must be > 0");
  }
}

double map_estimate(double m, double z, const ObserverModel& model) {
  const double s = model.sigma(z);
  return std::clamp(m - model.a(z) * s * s, 0.0, log_speed(model.u_max));
}

double psychometric_theoretical(double u, double z, double u_star, double z_star, const ObserverModel& model) {
  const double s = model.sigma(z);
  const double s_star = model.sigma(z_star);
  const double num = log_speed(u) - log_speed(u_star) - model.a(z_star) * s_star * s_star + model.a(z) * s * s;
  return psi(num / std::sqrt(s_star * s_star + s * s));
}

std::vector<Choice> simulate_observer(std::span<const TrialPair> trials, const ObserverModel& model,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  std::vector<Choice> out;
  out.reserve(trials.size());
  for (const TrialPair& t : trials) {
    const double m1 = log_speed(t.first.u) + model.sigma(t.first.z) * normal(rng);
    const double m2 = log_speed(t.second.u) + model.sigma(t.second.z) * normal(rng);
    const double e1 = map_estimate(m1, t.first.z, model);
    const double e2 = map_estimate(m2, t.second.z, model);
    if (e1 == e2) {
      out.push_back(coin(rng) ? Choice::first : Choice::second);
    } else {
      out.push_back(e1 > e2 ? Choice::first : Choice::second);
    }
  }
  return out;
}

}  // namespace mclab::inference
