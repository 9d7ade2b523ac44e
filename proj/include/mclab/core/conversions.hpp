#pragma once

#include "mclab/core/params.hpp"

namespace mclab {

/// (z0, sigma_z) pair parametrizing the log-normal f_Z.
struct FzShape {
  double z0 = 0.0;
  double sigma_z = 0.0;
};

/// Inverts m_z = z0/(1+s^2), d_z = z0 s^2 (1+s^2).
///
/// sigma_z is the unique positive root of x^2 (1+x^2)^2 = d_z/m_z, found by
/// bracketing bisection. d_z == 0 gives the degenerate sigma_z = 0.
/// Throws DomainError for m_z <= 0 or d_z < 0.
FzShape convert_mode_std(double m_z, double d_z);

/// Inverts the mode / octave-bandwidth pair: sigma_z = sqrt(exp(ln2/8 b_z^2) - 1).
FzShape convert_octave(double m_z, double b_z);

double mode_of(const FzShape& s);
double second_moment_scale_of(const FzShape& s);
double octave_bandwidth_of(double sigma_z);

DerivedParams derive(const MCParams& params);

}  // namespace mclab
