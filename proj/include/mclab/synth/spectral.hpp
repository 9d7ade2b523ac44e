#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mclab/core/densities.hpp"
#include "mclab/core/params.hpp"
#include "mclab/synth/frames.hpp"

namespace mclab::synth {

/// Spectral density (per deg^2 per Hz) as a function of (xi, tau).
using SpectrumFn = std::function<double(const FreqPoint&)>;

/// Precomputed 3-D Fourier filter; each `sample` draws one independent movie.
class SpectralSynth {
 public:
  SpectralSynth(const MCParams& params, const GridSpec& grid, int n_frames,
                RadialKind kind = RadialKind::spde_exact);
  SpectralSynth(const SpectrumFn& spectrum, const MCParams& params, const GridSpec& grid, int n_frames);

  [[nodiscard]] FrameStack sample(std::uint64_t seed) const;

 private:
  using BinSpectrum = std::function<double(int kt, int ky, int kx)>;
  void build(const BinSpectrum& spectrum);

  MCParams params_;
  GridSpec grid_;
  int n_frames_;
  std::vector<double> filter_;
};

/// Reference synthesis by global 3-D Fourier filtering: a real white
/// (t, y, x) volume is transformed, multiplied by sqrt(spectrum), and
/// transformed back. The movie is periodic in time with period n_frames / fps.
///
/// DC and every Nyquist plane are zeroed so the filter is exactly Hermitian.
FrameStack synth_spectral(const MCParams& params, const GridSpec& grid, int n_frames, std::uint64_t seed,
                          RadialKind kind = RadialKind::spde_exact);

/// Same construction for an arbitrary even spectrum; `params` is only recorded in the stack.
FrameStack synth_spectral(const SpectrumFn& spectrum, const MCParams& params, const GridSpec& grid,
                          int n_frames, std::uint64_t seed);

}  // namespace mclab::synth
