#include "mclab/core/densities.hpp"

#include <cmath>
#include <sstream>

#include "mclab/core/errors.hpp"
#include "mclab/core/ltransform.hpp"

namespace mclab {

double bessel_i0_scaled(double kappa) {
  kappa = std::abs(kappa);
  if (kappa < 700.0) return std::cyl_bessel_i(0.0, kappa) * std::exp(-kappa);
  const double r = 1.0 / kappa;
  return (1.0 + r * (1.0 / 8 + r * (9.0 / 128 + r * 225.0 / 3072))) / std::sqrt(2 * kPi * kappa);
}

double eval_fz(double z, const MCParams& params) {
  if (!(z > 0.0)) {
    std::ostringstream msg;
    msg << "eval_fz: spatial frequency must be positive, got " << z;
    throw DomainError(msg.str());
  }
  const double s2 = std::log1p(params.sigma_z * params.sigma_z);
  const double x = std::log(z / params.z0);
  return std::exp(-x * x / (2.0 * s2)) / (z * std::sqrt(2.0 * kPi * s2));
}

double eval_ftheta(double theta, const MCParams& params) {
  const double kappa = 1.0 / (4.0 * params.sigma_theta * params.sigma_theta);
  const double c = std::cos(2.0 * (theta - params.theta0));
  return std::exp(kappa * (c - 1.0)) / (kPi * bessel_i0_scaled(kappa));
}

double eval_fr(double r, const MCParams& params, RadialKind kind) {
  if (r < 0.0 || std::isnan(r)) {
    std::ostringstream msg;
    msg << "eval_fr: speed deviation must be non-negative, got " << r;
    throw DomainError(msg.str());
  }
  const double s = params.sigma_r;
  switch (kind) {
    case RadialKind::gaussian:
      return std::sqrt(2.0 / kPi) / s * std::exp(-r * r / (2.0 * s * s));
    case RadialKind::spde_exact:
      return linv_h(r / s) / (s * linv_h_mass());
  }
  return 0.0;
}

}  // namespace mclab
