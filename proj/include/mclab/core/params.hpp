#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace mclab {

using Vec2 = std::array<double, 2>;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double theta);

/// Full Motion Cloud parameter set in physical units.
///
/// Spatial frequencies are in cycles/degree, speeds in degrees/second and
/// angles in radians. `theta0` is the polar angle of the central spatial
/// frequency vector.
struct MCParams {
  Vec2 v0{0.0, 0.0};           // central translation speed (deg/s)
  double theta0 = 0.0;          // central orientation (rad)
  double sigma_theta = kPi / 12;  // orientation dispersion (rad)
  double z0 = 1.0;              // central spatial frequency (c/deg)
  double sigma_z = 0.5;         // log-normal frequency dispersion
  double sigma_r = 1.0;         // speed dispersion (deg/s)

  /// Throws ConfigError unless every dispersion and z0 is strictly positive
  /// and all fields are finite.
  void validate() const;

  /// Copy with theta0 wrapped into [-pi, pi) and validated.
  [[nodiscard]] MCParams normalized() const;

  friend bool operator==(const MCParams&, const MCParams&) = default;
};

/// A point (xi, tau) of the spatio-temporal frequency domain: xi in c/deg, tau in Hz.
struct FreqPoint {
  Vec2 xi{0.0, 0.0};
  double tau = 0.0;

  [[nodiscard]] double radius() const { return std::hypot(xi[0], xi[1]); }
  [[nodiscard]] double angle() const { return std::atan2(xi[1], xi[0]); }
};

/// Per-frequency coefficients of the critically damped sPDE.
struct SpdeCoeffs {
  double alpha_hat = 0.0;    // 1/s, equals 2/nu_hat
  double beta_hat = 0.0;     // 1/s^2, equals 1/nu_hat^2
  double sigma_w_hat = 0.0;  // driving noise amplitude, >= 0
  double nu_hat = 0.0;       // relaxation time (s), > 0
};

/// Quantities derived from an MCParams value.
struct DerivedParams {
  double m_z = 0.0;     // mode of f_Z (c/deg)
  double d_z = 0.0;     // second-moment scale of f_Z (c/deg)
  double b_z = 0.0;     // octave bandwidth
  double t_star = 0.0;  // temporal scale 1/(sigma_r z0) (s)
};

}  // namespace mclab
