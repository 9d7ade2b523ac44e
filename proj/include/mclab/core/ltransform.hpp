#pragma once

#include "mclab/core/quadrature.hpp"

namespace mclab {

/// Temporal profile realized by a critically damped mode: h(u) = (1 + u^2)^-2.
double h_profile(double u);

/// Angular transform mapping a radial speed density to the temporal profile
/// of the spectrum:
///
///   L(f)(u) = 1/2 * int_0^{pi/2} [ f(u / cos phi) + f(-u / cos phi) ] dphi
///
/// which for even f is int_0^{pi/2} f(u / cos phi) dphi. This is the
/// normalization under which `linv_h` inverts `h_profile`.
///
/// The integrand is evaluated away from phi = pi/2, where the argument
/// diverges and f must have decayed; points with cos phi == 0 contribute 0.
/// Throws NumericalError (with quadrature diagnostics) on non-convergence.
double l_transform(const Integrand& f, double u, const QuadOptions& opts = {1e-12, 1e-12, 4000});

/// Closed form of L^-1(h); even in u, equal to 2/pi at 0 and decaying as
/// 16 / (3 pi u^4).
double linv_h(double u);

/// int_0^inf linv_h(u) du, computed once by quadrature (equals pi/4).
double linv_h_mass();

}  // namespace mclab
