#pragma once

#include <cstdint>
#include <random>

#include "mclab/core/densities.hpp"
#include "mclab/core/params.hpp"
#include "mclab/synth/frames.hpp"

namespace mclab::synth {

/// Draws 2 (theta - theta0) from a von Mises law of concentration kappa (Best-Fisher).
double sample_von_mises(std::mt19937_64& rng, double kappa);

/// Draws a speed magnitude from the normalized f_R of `kind`.
double sample_radial_speed(std::mt19937_64& rng, const MCParams& params, RadialKind kind);

/// Finite-intensity shot-noise field
///
///   I(x, t) = lambda^{-1/2} sum_p cos(2 pi <x - X_p - V_p t, xi_p> + phi_p)
///
/// with grating textons. The number of textons is Poisson with mean `lambda`
/// per frame window; X_p is uniform over the window, phi_p uniform,
/// xi_p = z (cos theta, sin theta) with z ~ f_Z, theta ~ f_Theta, and
/// V_p = v0 + r (cos a, sin a) with r ~ f_R, a uniform. Each stack is one
/// independent realization. Variance is 1/2 for every lambda.
FrameStack shot_noise_sample(const MCParams& params, const GridSpec& grid, double lambda, int n_frames,
                             std::uint64_t seed, RadialKind kind = RadialKind::gaussian);

}  // namespace mclab::synth
