#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mclab/core/params.hpp"
#include "mclab/synth/fft.hpp"
#include "mclab/synth/frames.hpp"
#include "mclab/synth/grid.hpp"

namespace mclab::synth {

/// Coefficients of one spatial-frequency mode of the recursion
///
///   I[l+1] = a1 I[l] + a2 I[l-1] + gain w[l].
struct Ar2Mode {
  double a1 = 0.0;
  double a2 = 0.0;
  double gain = 0.0;

  /// a1 = 2 - delta alpha - delta^2 beta and a2 = -1 + delta alpha for the
  /// critically damped mode of relaxation time nu; gain is left at 0.
  static Ar2Mode critically_damped(double nu, double delta);

  /// Largest modulus of the roots of rho^2 - a1 rho - a2.
  [[nodiscard]] double spectral_radius() const;

  /// Stationary variance of I for unit-variance innovations w (infinite if unstable).
  [[nodiscard]] double stationary_variance() const;

  /// Lag-one stationary covariance divided by the variance.
  [[nodiscard]] double lag_one_correlation() const { return a1 / (1.0 - a2); }
};

/// Response I[0..n) of the scalar recursion to w = unit impulse at l = 0, zero initial state.
std::vector<double> impulse_response(const Ar2Mode& mode, int n);

/// Fault-injection and instrumentation hooks; defaults give the nominal stream.
struct SynthOptions {
  double noise_gain = 1.0;  // multiplies every driving-noise amplitude (0 gives a silent state)
  double nu_scale = 1.0;    // multiplies every relaxation time used to build the recursion
};

/// Streaming Motion Cloud synthesizer: one critically damped AR(2) mode per
/// retained spatial-frequency bin, driven by the FFT of a real white field.
///
/// Driving noise is scaled by delta^{3/2} ppd sigma_w_hat, which makes the
/// stream a discretization of a field whose spectral density (per deg^2 per Hz)
/// is mc_power_spectrum(kind = spde_exact). Emitted frames are translated by
/// v0 through a per-bin phase ramp.
///
/// Owned by a single thread at a time; distinct instances are independent.
class Ar2Synth {
 public:
  /// Throws ConfigError if the grid is invalid or the step is unstable.
  Ar2Synth(const MCParams& params, const GridSpec& grid, std::uint64_t seed, SynthOptions options = {});

  /// ceil(10 nu_max / delta): ten time constants of the slowest retained mode.
  [[nodiscard]] std::uint64_t default_warmup_steps() const;

  /// Advances the recursion without emitting (default_warmup_steps() if unset).
  void warm_up(std::optional<std::uint64_t> n_steps = std::nullopt);

  /// Replaces the state by an exact draw from the stationary law of the
  /// recursion, so no warm-up is needed.
  void start_stationary();

  /// One recursion step of length delta.
  void advance();

  /// Runs substeps() recursion steps and writes the next frame (ny x nx) to `out`.
  /// Throws NumericalError on non-finite output.
  void step_into(std::span<double> out);
  std::vector<double> step();

  /// Current spectral value of bin (kx, ky), before the v0 phase ramp.
  [[nodiscard]] Complex spectral_value(int kx, int ky) const;

  [[nodiscard]] const Ar2Mode& mode(int kx, int ky) const { return modes_[index(kx, ky)]; }
  [[nodiscard]] double nu(int kx, int ky) const { return nu_[index(kx, ky)]; }

  /// Stationary per-pixel variance of the emitted frames.
  [[nodiscard]] double stationary_pixel_variance() const;

  /// max |Im| / max |Re| of the last inverse transform.
  [[nodiscard]] double last_imag_residue() const { return last_residue_; }

  [[nodiscard]] bool warmed_up() const { return warmed_up_; }
  [[nodiscard]] std::uint64_t steps_taken() const { return steps_; }
  [[nodiscard]] std::uint64_t frames_emitted() const { return frames_; }
  [[nodiscard]] const GridSpec& grid() const { return grid_; }
  [[nodiscard]] const MCParams& params() const { return params_; }

 private:
  [[nodiscard]] std::size_t index(int kx, int ky) const {
    return static_cast<std::size_t>(ky) * grid_.nx + kx;
  }
  void white_spectrum(FftPlan& plan);

  MCParams params_;
  GridSpec grid_;
  std::vector<Ar2Mode> modes_;
  std::vector<double> nu_;
  std::vector<double> shift_;  // <xi, v0> in Hz
  std::vector<Complex> prev_;
  std::vector<Complex> cur_;
  FftPlan noise_plan_;
  FftPlan frame_plan_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uint64_t steps_ = 0;
  std::uint64_t frames_ = 0;
  bool warmed_up_ = false;
  double last_residue_ = 0.0;
};

/// Streams `n_frames` frames after warm-up (or a stationary start).
FrameStack synth_stream(const MCParams& params, const GridSpec& grid, int n_frames,
                        std::uint64_t seed, bool stationary_start = false, SynthOptions options = {});

}  // namespace mclab::synth
