#pragma once

#include "mclab/core/densities.hpp"
#include "mclab/core/params.hpp"

namespace mclab {

/// L(f_R)(u) for the radial profile of `kind`.
///
/// gaussian: transform of the normalized half-line Gaussian, evaluated through
///   int_0^{pi/2} exp(-a / cos^2 phi) dphi = pi/2 erfc(sqrt(a)).
/// spde_exact: f_R = L^-1(h)(r / sigma_r) taken unnormalized, so the
///   transform is exactly h(u / sigma_r).
double l_of_fr(double u, const MCParams& params, RadialKind kind);

/// Motion Cloud power spectrum
///
///   f_Z(|xi|) / |xi|^2 * f_Theta(angle xi) * L(f_R)(-(tau + <v0, xi>) / |xi|)
///
/// with xi in c/deg and tau in Hz. Zero at xi = 0 (zero-mean textures).
double mc_power_spectrum(const FreqPoint& p, const MCParams& params, RadialKind kind);

/// sPDE coefficients at spatial frequency xi (c/deg).
///
/// nu_hat = 1 / (2 pi sigma_r |xi|) is the relaxation time, critically damped
/// (alpha = 2/nu, beta = 1/nu^2), and sigma_w_hat^2 = f_Z f_Theta / (nu^4 |xi|^2)
/// so that `spde_stationary_spectrum` reproduces the spde_exact spectrum.
/// Throws DomainError at xi = 0.
SpdeCoeffs spde_coeffs(const Vec2& xi, const MCParams& params);

/// Temporal power spectrum (tau in Hz) of the stationary solution of
/// I'' + alpha I' + beta I = sigma_w w(t) with unit white noise w:
/// sigma_w^2 nu^4 h(2 pi nu tau).
double spde_stationary_spectrum(const SpdeCoeffs& c, double tau);

/// Normalized autocorrelation of a critically damped mode: (1 + |t|/nu) e^{-|t|/nu}.
double spde_autocorrelation(double lag_seconds, double nu_hat);

}  // namespace mclab
