#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace mclab::inference {

/// Offset of the log-speed transform (deg/s).
inline constexpr double kU0 = 0.3;

/// Standard normal CDF.
double psi(double t);

/// log Phi(t), accurate far into the lower tail.
double log_psi(double t);

/// Log-speed ln(1 + u / 0.3). Throws DomainError for u <= -0.3.
double log_speed(double u);

/// Inverse of log_speed: 0.3 (e^s - 1).
double speed_from_log(double s);

/// Bayesian observer: Gaussian likelihood of width sigma_z and Laplacian
/// prior slope a_z, both in log-speed units and defined on a set of spatial
/// frequencies z (c/deg).
struct ObserverModel {
  std::map<double, double> sigma_by_z;
  std::map<double, double> a_by_z;
  double u_max = 20.0;  // prior cutoff (deg/s)

  /// Throws DomainError when z has no entry (keys match to 1e-9 relative).
  [[nodiscard]] double sigma(double z) const;
  [[nodiscard]] double a(double z) const;
  [[nodiscard]] bool defined_at(double z) const;

  /// Adds or replaces the entry for z.
  void set(double z, double sigma_z, double a_z);

  /// Throws ConfigError unless every sigma is positive and u_max > 0.
  void validate() const;
};

/// MAP estimate m - a_z sigma_z^2, clamped to the prior support [0, log_speed(u_max)].
double map_estimate(double m, double z, const ObserverModel& model);

/// Probability that the (u, z_star) stimulus is judged faster than the
/// (u_star, z) stimulus:
///
///   psi((u~ - u~* - a_{z*} s_{z*}^2 + a_z s_z^2) / sqrt(s_{z*}^2 + s_z^2))
///
/// with speeds given in deg/s and converted by log_speed.
double psychometric_theoretical(double u, double z, double u_star, double z_star, const ObserverModel& model);

/// One stimulus interval: speed (deg/s) and spatial frequency (c/deg).
struct Interval {
  double u = 0.0;
  double z = 0.0;
};

struct TrialPair {
  Interval first;
  Interval second;
};

enum class Choice { first, second };

/// Gaussian-measurement observer: per interval draws M ~ N(log_speed(u), sigma_z^2),
/// applies map_estimate and picks the larger estimate (exact ties by a fair coin).
std::vector<Choice> simulate_observer(std::span<const TrialPair> trials, const ObserverModel& model,
                                      std::uint64_t seed);

}  // namespace mclab::inference
