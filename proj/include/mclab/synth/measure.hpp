#pragma once

#include <complex>
#include <span>
#include <vector>

#include "mclab/core/densities.hpp"
#include "mclab/core/params.hpp"
#include "mclab/synth/frames.hpp"

namespace mclab::synth {

/// A sampled 3-D spectrum on the DFT grid of an nt x ny x nx movie.
/// Values are spectral densities per deg^2 per Hz, indexed (kt, ky, kx).
struct Spectrum3 {
  GridSpec grid;
  int nt = 0;
  std::vector<double> power;

  [[nodiscard]] std::size_t index(int kt, int ky, int kx) const {
    return (static_cast<std::size_t>(kt) * grid.ny + ky) * grid.nx + kx;
  }
  [[nodiscard]] double at(int kt, int ky, int kx) const { return power[index(kt, ky, kx)]; }
  [[nodiscard]] FreqPoint freq(int kt, int ky, int kx) const;
};

/// Ensemble-averaged periodogram |DFT|^2 / (N ppd^2 fps) of equally shaped
/// stacks; its expectation is the spectral density of a stationary field.
Spectrum3 periodogram(std::span<const FrameStack> stacks);

/// mc_power_spectrum sampled on the same grid, zero on DC and Nyquist planes.
Spectrum3 analytic_spectrum(const MCParams& params, const GridSpec& grid, int nt, RadialKind kind);

/// ||est - ref|| / ||ref|| over the bins where ref >= band_fraction * max(ref).
double relative_l2_on_band(const Spectrum3& est, const Spectrum3& ref, double band_fraction = 0.01);

/// Normalized sample autocorrelation Re <x_t conj(x_{t+k})> / <|x|^2> for k = 0..max_lag.
std::vector<double> sample_autocorrelation(std::span<const std::complex<double>> series, int max_lag);

/// Empirical spatial covariance E[I(y, x) I(y + dy, x + dx)] for |dx|, |dy| <= max_lag,
/// averaged over every frame of every stack (non-circular, zero-mean assumed).
/// Row-major (2 max_lag + 1)^2 map with the zero lag at the center.
std::vector<double> spatial_covariance(std::span<const FrameStack> stacks, int max_lag);

/// Sample kurtosis E[x^4] / E[x^2]^2 about zero (3 for a Gaussian).
double raw_kurtosis(std::span<const double> values);

}  // namespace mclab::synth
