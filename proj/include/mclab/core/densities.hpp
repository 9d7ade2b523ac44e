#pragma once

#include "mclab/core/params.hpp"

namespace mclab {

/// Shape of the radial speed density f_R.
enum class RadialKind {
  gaussian,    // half-line Gaussian bell of width sigma_r
  spde_exact,  // L^-1(h)(r / sigma_r), the profile realized exactly by the sPDE
};

/// Normalized log-normal spatial-frequency density. Throws DomainError for z <= 0.
double eval_fz(double z, const MCParams& params);

/// Normalized von Mises orientation density in cos(2(theta - theta0)).
/// pi-periodic; integrates to 1 over any interval of length pi.
double eval_ftheta(double theta, const MCParams& params);

/// Normalized radial speed density on r >= 0. Throws DomainError for r < 0.
double eval_fr(double r, const MCParams& params, RadialKind kind);

/// exp(-kappa) * I0(kappa), finite for all kappa >= 0.
double bessel_i0_scaled(double kappa);

}  // namespace mclab
