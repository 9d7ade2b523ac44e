#include "mclab/inference/mle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mclab/core/errors.hpp"
#include "mclab/core/spectrum.hpp"
#include "mclab/synth/fft.hpp"

namespace mclab::inference {
namespace {

using synth::Complex;

struct BinModel {
  std::size_t index;
  double xi_x;
  double alpha;
  double beta;
  double weight;
};

struct Spectra {
  std::vector<Complex> data;  // frame-major
  std::size_t frame_size;
  const Complex* frame(int t) const { return data.data() + t * frame_size; }
};

void check_stack(const synth::FrameStack& stack) {
  if (stack.n_frames < 3) {
    throw DomainError("mle_speed: need at least 3 frames, got " + std::to_string(stack.n_frames));
  }
  stack.grid.validate();
  if (stack.data.size() != stack.frame_size() * static_cast<std::size_t>(stack.n_frames)) {
    throw DomainError("mle_speed: stack data size does not match its grid");
  }
}

Spectra frame_spectra(const synth::FrameStack& stack) {
  synth::FftPlan plan({stack.grid.ny, stack.grid.nx}, synth::FftPlan::Direction::forward);
  Spectra s{std::vector<Complex>(stack.data.size()), stack.frame_size()};
  for (int t = 0; t < stack.n_frames; ++t) {
    const auto f = stack.frame(t);
    for (std::size_t i = 0; i < s.frame_size; ++i) plan[i] = Complex(f[i], 0.0);
    plan.execute();
    std::copy(plan.data(), plan.data() + s.frame_size, s.data.begin() + t * s.frame_size);
  }
  return s;
}

std::vector<BinModel> bin_models(const synth::GridSpec& grid, const MCParams& params, double weight_floor) {
  const MCParams p = params.normalized();
  std::vector<BinModel> bins;
  double max_var = 0.0;
  for (int ky = 0; ky < grid.ny; ++ky) {
    for (int kx = 0; kx < grid.nx; ++kx) {
      if (!grid.retained(kx, ky)) continue;
      const Vec2 xi{grid.freq_x(kx), grid.freq_y(ky)};
      const SpdeCoeffs c = spde_coeffs(xi, p);
      const double var = c.sigma_w_hat * c.sigma_w_hat;
      max_var = std::max(max_var, var);
      bins.push_back({static_cast<std::size_t>(ky) * grid.nx + kx, xi[0], c.alpha_hat, c.beta_hat, var});
    }
  }
  std::erase_if(bins, [&](const BinModel& b) { return !(b.weight > weight_floor * max_var); });
  for (auto& b : bins) b.weight = 1.0 / b.weight;
  return bins;
}

double polish(const std::vector<double>& c, double x) {
  // Newton on the polynomial with coefficients c (ascending).
  for (int it = 0; it < 3; ++it) {
    double p = 0.0;
    double dp = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
      dp = dp * x + p;
      p = p * x + c[k];
    }
    if (dp == 0.0 || !std::isfinite(p / dp)) break;
    const double next = x - p / dp;
    if (!std::isfinite(next)) break;
    x = next;
  }
  return x;
}

}  // namespace

double quartic_energy(const std::array<double, 5>& coeffs, double u) {
  double e = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) e = e * u + coeffs[k];
  return e;
}

std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  std::vector<double> roots;
  if (scale == 0.0) return roots;
  const double eps = 1e-14 * scale;
  if (std::abs(c3) > eps) {
    // Depressed cubic t^3 + p t + q with u = t - b/3.
    const double b = c2 / c3;
    const double c = c1 / c3;
    const double d = c0 / c3;
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    const double shift = -b / 3.0;
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s) + shift);
    } else if (p == 0.0) {
      roots.push_back(shift);
    } else {
      const double r = 2.0 * std::sqrt(-p / 3.0);
      const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
      const double phi = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k) roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
    }
    const std::vector<double> poly{c0, c1, c2, c3};
    for (double& x : roots) x = polish(poly, x);
  } else if (std::abs(c2) > eps) {
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      const double qq = -0.5 * (c1 + std::copysign(s, c1));
      if (qq != 0.0) {
        roots.push_back(qq / c2);
        roots.push_back(c0 / qq);
      } else {
        roots.push_back(0.0);
      }
    }
  } else if (std::abs(c1) > eps) {
    roots.push_back(-c0 / c1);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

namespace {

MleReport solve_around(const std::vector<BinModel>& bins, const Spectra& spec, int n_frames, double d,
                       double center, const MleOptions& options) {
  const double two_pi = 2.0 * std::numbers::pi;
  const Complex i_unit(0.0, 1.0);

  std::array<double, 5> p{};
  for (const auto& bin : bins) {
    const double a2 = bin.alpha * d - 1.0;
    const double k = two_pi * bin.xi_x;
    const Complex rot = center == 0.0 ? Complex(1.0, 0.0) : std::polar(1.0, k * center * d);
    for (int l = 1; l + 1 < n_frames; ++l) {
      const Complex im = spec.frame(l - 1)[bin.index] / rot;
      const Complex ic = spec.frame(l)[bin.index];
      const Complex ip = spec.frame(l + 1)[bin.index] * rot;
      const Complex a = (ip - 2.0 * ic + im) / (d * d) + bin.alpha * (ic - im) / d + bin.beta * ic;
      const Complex b = i_unit * k * ((ip - im) / d + bin.alpha * im);
      const Complex c = options.drop_hessian ? Complex{} : -0.5 * k * k * (ip - a2 * im);
      const double w = bin.weight;
      p[0] += w * std::norm(a);
      p[1] += 2.0 * w * std::real(a * std::conj(b));
      p[2] += w * (std::norm(b) + 2.0 * std::real(a * std::conj(c)));
      p[3] += 2.0 * w * std::real(b * std::conj(c));
      p[4] += w * std::norm(c);
    }
  }
  if (!(p[2] > 0.0 || p[4] > 0.0) || !std::isfinite(p[0] + p[1] + p[2] + p[3] + p[4])) {
    throw FitError("mle_speed: degenerate stack (no signal in the weighted bins)");
  }

  MleReport report;
  report.coeffs = p;
  report.expansion_speed = center;
  report.bins_used = static_cast<int>(bins.size());
  report.frames_used = n_frames - 2;
  const double lo = -options.u_bound - center;
  const double hi = options.u_bound - center;
  std::vector<double> shifts;
  for (double r : real_cubic_roots(4.0 * p[4], 3.0 * p[3], 2.0 * p[2], p[1])) {
    if (r >= lo && r <= hi) shifts.push_back(r);
  }
  const std::size_t n_roots = shifts.size();
  shifts.push_back(lo);
  shifts.push_back(hi);

  report.energy = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    report.candidates.push_back(center + shifts[i]);
    const double e = quartic_energy(p, shifts[i]);
    if (e < report.energy) {
      report.energy = e;
      report.u_hat = center + shifts[i];
      report.provenance = i < n_roots ? MleProvenance::interior_root : MleProvenance::boundary;
    }
  }
  return report;
}

}  // namespace

double report_energy(const MleReport& report, double u) {
  return quartic_energy(report.coeffs, u - report.expansion_speed);
}

MleReport mle_speed(const synth::FrameStack& stack, const MCParams& params, const MleOptions& options) {
  check_stack(stack);
  const auto bins = bin_models(stack.grid, params, options.weight_floor);
  const Spectra spec = frame_spectra(stack);
  const double d = stack.grid.frame_period();
  MleReport report = solve_around(bins, spec, stack.n_frames, d, 0.0, options);
  for (int it = 0; it < options.refine_steps; ++it) {
    report = solve_around(bins, spec, stack.n_frames, d, report.u_hat, options);
  }
  return report;
}

double exact_residual_energy(const synth::FrameStack& stack, const MCParams& params, double u,
                             const MleOptions& options) {
  check_stack(stack);
  const auto bins = bin_models(stack.grid, params, options.weight_floor);
  const Spectra spec = frame_spectra(stack);
  const double d = stack.grid.frame_period();
  double e = 0.0;
  for (const auto& bin : bins) {
    const double a1 = 2.0 - d * bin.alpha - d * d * bin.beta;
    const double a2 = bin.alpha * d - 1.0;
    const Complex rot = std::polar(1.0, 2.0 * std::numbers::pi * bin.xi_x * u * d);
    for (int l = 1; l + 1 < stack.n_frames; ++l) {
      const Complex r = spec.frame(l + 1)[bin.index] * rot - a1 * spec.frame(l)[bin.index] -
                        a2 * spec.frame(l - 1)[bin.index] / rot;
      e += bin.weight * std::norm(r);
    }
  }
  return e / (d * d * d * d);
}

std::vector<Choice> simulate_observer_mle(std::span<const TrialPair> trials, const ObserverModel& model,
                                          const StimulusFactory& factory, std::uint64_t seed,
                                          const MleOptions& options) {
  std::mt19937_64 coin_rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<Choice> out;
  out.reserve(trials.size());
  auto estimate = [&](const Interval& iv, std::uint64_t s) {
    const MleStimulus stim = factory(iv, s);
    const double u_hat = mle_speed(stim.stack, stim.params, options).u_hat;
    return map_estimate(log_speed(std::max(u_hat, 0.0)), iv.z, model);
  };
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const double e1 = estimate(trials[t].first, seed + 2 * t);
    const double e2 = estimate(trials[t].second, seed + 2 * t + 1);
    if (e1 == e2) {
      out.push_back(coin(coin_rng) ? Choice::first : Choice::second);
    } else {
      out.push_back(e1 > e2 ? Choice::first : Choice::second);
    }
  }
  return out;
}

}  // namespace mclab::inference
