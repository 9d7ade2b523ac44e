#pragma once

#include <json.hpp>

#include "mclab/core/params.hpp"

namespace mclab::synth {

/// Largest admissible ratio delta / nu_hat for the AR(2) recursion.
///
/// With x = delta / nu_hat the characteristic roots of
/// rho^2 - (2 - 2x - x^2) rho - (2x - 1) = 0 lie strictly inside the unit
/// circle iff 0 < x < 2 sqrt(2) - 2.
inline constexpr double kMaxStepRatio = 0.82842712474619009760;

/// Sampling contract between array indices and physical units.
///
/// Frames are ny rows by nx columns; column index maps to the first
/// component of xi / v0 and row index to the second. The AR recursion runs
/// at `step()` and emits one frame every `substeps()` steps.
struct GridSpec {
  int nx = 256;
  int ny = 256;
  double ppd = 26.0;   // pixels per degree
  double fps = 100.0;  // emitted frames per second
  double delta = 0.0;  // AR step (s); 0 selects 1/fps

  /// Throws ConfigError on non-power-of-two sizes, non-positive rates, or a
  /// delta that does not divide the frame period.
  void validate() const;

  [[nodiscard]] double frame_period() const { return 1.0 / fps; }
  [[nodiscard]] double step() const { return delta > 0.0 ? delta : frame_period(); }
  [[nodiscard]] int substeps() const;

  /// Signed spatial frequency (c/deg) of column / row bin k.
  [[nodiscard]] double freq_x(int k) const;
  [[nodiscard]] double freq_y(int k) const;

  /// Bins that carry signal: everything except DC and the Nyquist row/column.
  [[nodiscard]] bool retained(int kx, int ky) const;

  /// Smallest and largest |xi| over retained bins.
  [[nodiscard]] double min_radius() const;
  [[nodiscard]] double max_radius() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Signed DFT frequency of bin k for n samples at `rate` samples per unit.
double fft_freq(int k, int n, double rate);

/// nu_hat of the fastest retained mode.
double min_relaxation_time(const MCParams& params, const GridSpec& grid);

/// nu_hat of the slowest retained mode.
double max_relaxation_time(const MCParams& params, const GridSpec& grid);

/// Supremum of stable AR steps for this grid (kMaxStepRatio * min nu_hat).
double max_stable_delta(const MCParams& params, const GridSpec& grid);

/// Throws ConfigError naming the maximum admissible delta if the recursion
/// would be unstable on some retained bin.
void check_stability(const MCParams& params, const GridSpec& grid);

/// Copy of `grid` whose delta is the largest frame_period / k with
/// delta / min nu_hat <= target_ratio.
GridSpec with_auto_delta(const MCParams& params, GridSpec grid, double target_ratio = 0.5);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& doc);

}  // namespace mclab::synth
