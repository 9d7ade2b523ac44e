#include "mclab/synth/spectral.hpp"

#include <cmath>
#include <random>

#include "mclab/core/densities.hpp"
#include "mclab/core/errors.hpp"
#include "mclab/core/spectrum.hpp"
#include "mclab/synth/fft.hpp"

namespace mclab::synth {

SpectralSynth::SpectralSynth(const MCParams& params, const GridSpec& grid, int n_frames, RadialKind kind)
    : params_(params.normalized()), grid_(grid), n_frames_(n_frames) {
  // The spatial factor f_Z f_Theta / |xi|^2 does not depend on tau; cache it per bin.
  const MCParams& p = params_;
  std::vector<double> spatial(static_cast<std::size_t>(grid.nx) * grid.ny, 0.0);
  grid.validate();
  for (int ky = 0; ky < grid.ny; ++ky) {
    for (int kx = 0; kx < grid.nx; ++kx) {
      if (!grid.retained(kx, ky)) continue;
      const FreqPoint f{{grid.freq_x(kx), grid.freq_y(ky)}, 0.0};
      const double rho = f.radius();
      spatial[static_cast<std::size_t>(ky) * grid.nx + kx] =
          eval_fz(rho, p) / (rho * rho) * eval_ftheta(f.angle(), p);
    }
  }
  build([&](int kt, int ky, int kx) {
    const FreqPoint f{{grid.freq_x(kx), grid.freq_y(ky)}, fft_freq(kt, n_frames, grid.fps)};
    const double shift = p.v0[0] * f.xi[0] + p.v0[1] * f.xi[1];
    return spatial[static_cast<std::size_t>(ky) * grid.nx + kx] *
           l_of_fr(-(f.tau + shift) / f.radius(), p, kind);
  });
}

SpectralSynth::SpectralSynth(const SpectrumFn& spectrum, const MCParams& params, const GridSpec& grid,
                             int n_frames)
    : params_(params), grid_(grid), n_frames_(n_frames) {
  build([&](int kt, int ky, int kx) {
    return spectrum(FreqPoint{{grid.freq_x(kx), grid.freq_y(ky)}, fft_freq(kt, n_frames, grid.fps)});
  });
}

void SpectralSynth::build(const BinSpectrum& spectrum) {
  grid_.validate();
  if (n_frames_ < 1) throw ConfigError("synth_spectral: n_frames must be >= 1");
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const int nt = n_frames_;
  filter_.assign(static_cast<std::size_t>(nt) * nx * ny, 0.0);
  // |X_k|^2 = N S / (dx^2 dt) makes S the spectral density of the output.
  const double density_scale = grid_.ppd * grid_.ppd * grid_.fps;
  std::size_t i = 0;
  for (int kt = 0; kt < nt; ++kt) {
    const bool t_nyquist = nt % 2 == 0 && nt > 1 && kt == nt / 2;
    for (int ky = 0; ky < ny; ++ky) {
      for (int kx = 0; kx < nx; ++kx, ++i) {
        if (t_nyquist || !grid_.retained(kx, ky)) continue;
        const double s = spectrum(kt, ky, kx);
        filter_[i] = std::sqrt(std::max(s, 0.0) * density_scale);
      }
    }
  }
}

FrameStack SpectralSynth::sample(std::uint64_t seed) const {
  FftPlan forward({n_frames_, grid_.ny, grid_.nx}, FftPlan::Direction::forward);
  FftPlan backward({n_frames_, grid_.ny, grid_.nx}, FftPlan::Direction::backward);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < forward.size(); ++i) forward[i] = Complex{normal(rng), 0.0};
  forward.execute();
  for (std::size_t i = 0; i < forward.size(); ++i) backward[i] = forward[i] * filter_[i];
  backward.execute();

  FrameStack stack(grid_, params_, seed, n_frames_);
  const double inv_n = 1.0 / static_cast<double>(backward.size());
  double max_re = 0.0;
  double max_im = 0.0;
  for (std::size_t j = 0; j < backward.size(); ++j) {
    max_re = std::max(max_re, std::abs(backward[j].real()));
    max_im = std::max(max_im, std::abs(backward[j].imag()));
    stack.data[j] = backward[j].real() * inv_n;
  }
  if (max_re > 0.0 && max_im / max_re > 1e-8) {
    throw NumericalError("synth_spectral: spectrum is not even; output has an imaginary part");
  }
  return stack;
}

FrameStack synth_spectral(const MCParams& params, const GridSpec& grid, int n_frames, std::uint64_t seed,
                          RadialKind kind) {
  return SpectralSynth(params, grid, n_frames, kind).sample(seed);
}

FrameStack synth_spectral(const SpectrumFn& spectrum, const MCParams& params, const GridSpec& grid,
                          int n_frames, std::uint64_t seed) {
  return SpectralSynth(spectrum, params, grid, n_frames).sample(seed);
}

}  // namespace mclab::synth
