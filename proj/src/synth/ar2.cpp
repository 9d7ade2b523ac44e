#include "mclab/synth/ar2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mclab/core/errors.hpp"
#include "mclab/core/spectrum.hpp"

namespace mclab::synth {

Ar2Mode Ar2Mode::critically_damped(double nu, double delta) {
  const double alpha = 2.0 / nu;
  const double beta = 1.0 / (nu * nu);
  return {2.0 - delta * alpha - delta * delta * beta, -1.0 + delta * alpha, 0.0};
}

double Ar2Mode::spectral_radius() const {
  const double disc = a1 * a1 + 4.0 * a2;
  if (disc < 0.0) return std::sqrt(-a2);
  const double s = std::sqrt(disc);
  return std::max(std::abs(a1 + s), std::abs(a1 - s)) / 2.0;
}

double Ar2Mode::stationary_variance() const {
  if (spectral_radius() >= 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
}

std::vector<double> impulse_response(const Ar2Mode& mode, int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  double prev = 0.0;
  double cur = 0.0;
  for (int l = 0; l < n; ++l) {
    const double next = mode.a1 * cur + mode.a2 * prev + (l == 0 ? 1.0 : 0.0);
    prev = cur;
    cur = next;
    out[l] = cur;
  }
  return out;
}

Ar2Synth::Ar2Synth(const MCParams& params, const GridSpec& grid, std::uint64_t seed, SynthOptions options)
    : params_(params.normalized()),
      grid_(grid),
      noise_plan_({grid.ny, grid.nx}, FftPlan::Direction::forward),
      frame_plan_({grid.ny, grid.nx}, FftPlan::Direction::backward),
      rng_(seed) {
  check_stability(params_, grid_);
  const std::size_t n = static_cast<std::size_t>(grid_.nx) * grid_.ny;
  modes_.assign(n, Ar2Mode{});
  nu_.assign(n, 0.0);
  shift_.assign(n, 0.0);
  prev_.assign(n, Complex{});
  cur_.assign(n, Complex{});

  const double delta = grid_.step();
  const double noise_scale = std::pow(delta, 1.5) * grid_.ppd * options.noise_gain;
  for (int ky = 0; ky < grid_.ny; ++ky) {
    for (int kx = 0; kx < grid_.nx; ++kx) {
      if (!grid_.retained(kx, ky)) continue;
      const Vec2 xi{grid_.freq_x(kx), grid_.freq_y(ky)};
      const SpdeCoeffs c = spde_coeffs(xi, params_);
      const std::size_t i = index(kx, ky);
      nu_[i] = c.nu_hat * options.nu_scale;
      modes_[i] = Ar2Mode::critically_damped(nu_[i], delta);
      modes_[i].gain = noise_scale * c.sigma_w_hat;
      shift_[i] = xi[0] * params_.v0[0] + xi[1] * params_.v0[1];
      if (!(modes_[i].spectral_radius() < 1.0)) {
        std::ostringstream msg;
        msg << "unstable AR(2) mode at xi=(" << xi[0] << ", " << xi[1] << "): delta/nu=" << delta / nu_[i]
            << " exceeds " << kMaxStepRatio;
        throw ConfigError(msg.str());
      }
    }
  }
}

std::uint64_t Ar2Synth::default_warmup_steps() const {
  const double nu_max = *std::max_element(nu_.begin(), nu_.end());
  return static_cast<std::uint64_t>(std::ceil(10.0 * nu_max / grid_.step()));
}

void Ar2Synth::warm_up(std::optional<std::uint64_t> n_steps) {
  const std::uint64_t n = n_steps.value_or(default_warmup_steps());
  for (std::uint64_t i = 0; i < n; ++i) advance();
  warmed_up_ = true;
}

void Ar2Synth::white_spectrum(FftPlan& plan) {
  for (std::size_t i = 0; i < plan.size(); ++i) plan[i] = Complex{normal_(rng_), 0.0};
  plan.execute();
}

void Ar2Synth::start_stationary() {
  const std::size_t n = modes_.size();
  white_spectrum(noise_plan_);
  std::copy(noise_plan_.data(), noise_plan_.data() + n, prev_.begin());
  white_spectrum(noise_plan_);
  for (std::size_t i = 0; i < n; ++i) {
    const Ar2Mode& m = modes_[i];
    if (m.gain == 0.0) {
      prev_[i] = cur_[i] = Complex{};
      continue;
    }
    const double s = m.gain * std::sqrt(m.stationary_variance());
    const double rho = m.lag_one_correlation();
    const Complex a = prev_[i];
    prev_[i] = s * a;
    cur_[i] = s * (rho * a + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * noise_plan_[i]);
  }
  warmed_up_ = true;
}

void Ar2Synth::advance() {
  white_spectrum(noise_plan_);
  const Complex* w = noise_plan_.data();
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const Ar2Mode& m = modes_[i];
    const Complex next = m.a1 * cur_[i] + m.a2 * prev_[i] + m.gain * w[i];
    prev_[i] = cur_[i];
    cur_[i] = next;
  }
  ++steps_;
}

void Ar2Synth::step_into(std::span<double> out) {
  const std::size_t n = modes_.size();
  if (out.size() != n) throw ConfigError("Ar2Synth::step_into: output span has the wrong size");
  if (!warmed_up_) warm_up();
  for (int s = 0; s < grid_.substeps(); ++s) advance();

  const double t = static_cast<double>(frames_) * grid_.frame_period();
  for (std::size_t i = 0; i < n; ++i) {
    const double turns = std::fmod(shift_[i] * t, 1.0);
    frame_plan_[i] = cur_[i] * std::polar(1.0, -2.0 * kPi * turns);
  }
  frame_plan_.execute();

  double max_re = 0.0;
  double max_im = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex v = frame_plan_[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw NumericalError("Ar2Synth: non-finite value in frame " + std::to_string(frames_));
    }
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
    out[i] = v.real() * inv_n;
  }
  last_residue_ = max_re > 0.0 ? max_im / max_re : 0.0;
  if (last_residue_ > 1e-8) {
    throw NumericalError("Ar2Synth: spectral state lost Hermitian symmetry (residue " +
                         std::to_string(last_residue_) + ")");
  }
  ++frames_;
}

std::vector<double> Ar2Synth::step() {
  std::vector<double> frame(modes_.size());
  step_into(frame);
  return frame;
}

Complex Ar2Synth::spectral_value(int kx, int ky) const { return cur_[index(kx, ky)]; }

double Ar2Synth::stationary_pixel_variance() const {
  double total = 0.0;
  for (const Ar2Mode& m : modes_) {
    if (m.gain != 0.0) total += m.stationary_variance() * m.gain * m.gain;
  }
  return total / static_cast<double>(modes_.size());
}

FrameStack synth_stream(const MCParams& params, const GridSpec& grid, int n_frames, std::uint64_t seed,
                        bool stationary_start, SynthOptions options) {
  if (n_frames < 1) throw ConfigError("synth_stream: n_frames must be >= 1");
  Ar2Synth synth(params, grid, seed, options);
  if (stationary_start) {
    synth.start_stationary();
  } else {
    synth.warm_up();
  }
  FrameStack stack(grid, synth.params(), seed, n_frames);
  for (int t = 0; t < n_frames; ++t) synth.step_into(stack.frame(t));
  return stack;
}

}  // namespace mclab::synth
