#include "mclab/core/spectrum.hpp"

#include <cmath>

#include "mclab/core/errors.hpp"
#include "mclab/core/ltransform.hpp"

namespace mclab {

double l_of_fr(double u, const MCParams& params, RadialKind kind) {
  const double s = params.sigma_r;
  switch (kind) {
    case RadialKind::gaussian:
      return std::sqrt(2.0 / kPi) / s * (kPi / 2) * std::erfc(std::abs(u) / (std::sqrt(2.0) * s));
    case RadialKind::spde_exact:
      return h_profile(u / s);
  }
  return 0.0;
}

double mc_power_spectrum(const FreqPoint& p, const MCParams& params, RadialKind kind) {
  const double rho = p.radius();
  if (rho == 0.0) return 0.0;
  const double shift = params.v0[0] * p.xi[0] + params.v0[1] * p.xi[1];
  const double u = -(p.tau + shift) / rho;
  return eval_fz(rho, params) / (rho * rho) * eval_ftheta(p.angle(), params) *
         l_of_fr(u, params, kind);
}

SpdeCoeffs spde_coeffs(const Vec2& xi, const MCParams& params) {
  const double rho = std::hypot(xi[0], xi[1]);
  if (rho == 0.0) throw DomainError("spde_coeffs: xi = 0 has no relaxation time (exclude DC)");
  SpdeCoeffs c;
  c.nu_hat = 1.0 / (2.0 * kPi * params.sigma_r * rho);
  c.alpha_hat = 2.0 / c.nu_hat;
  c.beta_hat = 1.0 / (c.nu_hat * c.nu_hat);
  const double nu2 = c.nu_hat * c.nu_hat;
  const double var = eval_fz(rho, params) * eval_ftheta(std::atan2(xi[1], xi[0]), params) /
                     (nu2 * nu2 * rho * rho);
  c.sigma_w_hat = std::sqrt(var);
  return c;
}

double spde_stationary_spectrum(const SpdeCoeffs& c, double tau) {
  const double nu2 = c.nu_hat * c.nu_hat;
  return c.sigma_w_hat * c.sigma_w_hat * nu2 * nu2 * h_profile(2.0 * kPi * c.nu_hat * tau);
}

double spde_autocorrelation(double lag_seconds, double nu_hat) {
  const double s = std::abs(lag_seconds) / nu_hat;
  return (1.0 + s) * std::exp(-s);
}

}  // namespace mclab
