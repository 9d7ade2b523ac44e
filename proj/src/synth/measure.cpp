#include "mclab/synth/measure.hpp"

#include <algorithm>
#include <cmath>

#include "mclab/core/errors.hpp"
#include "mclab/core/spectrum.hpp"
#include "mclab/synth/fft.hpp"

namespace mclab::synth {

FreqPoint Spectrum3::freq(int kt, int ky, int kx) const {
  return {{grid.freq_x(kx), grid.freq_y(ky)}, fft_freq(kt, nt, grid.fps)};
}

Spectrum3 periodogram(std::span<const FrameStack> stacks) {
  if (stacks.empty()) throw ConfigError("periodogram: need at least one stack");
  const FrameStack& first = stacks.front();
  Spectrum3 out{first.grid, first.n_frames, std::vector<double>(first.data.size(), 0.0)};
  FftPlan plan({first.n_frames, first.grid.ny, first.grid.nx}, FftPlan::Direction::forward);
  const double n = static_cast<double>(plan.size());
  const double scale = 1.0 / (n * first.grid.ppd * first.grid.ppd * first.grid.fps * stacks.size());
  for (const FrameStack& s : stacks) {
    if (s.n_frames != first.n_frames || s.grid.nx != first.grid.nx || s.grid.ny != first.grid.ny) {
      throw ConfigError("periodogram: stacks differ in shape");
    }
    for (std::size_t i = 0; i < plan.size(); ++i) plan[i] = Complex{s.data[i], 0.0};
    plan.execute();
    for (std::size_t i = 0; i < plan.size(); ++i) out.power[i] += std::norm(plan[i]) * scale;
  }
  return out;
}

Spectrum3 analytic_spectrum(const MCParams& params, const GridSpec& grid, int nt, RadialKind kind) {
  const MCParams p = params.normalized();
  Spectrum3 out{grid, nt, std::vector<double>(static_cast<std::size_t>(nt) * grid.nx * grid.ny, 0.0)};
  for (int kt = 0; kt < nt; ++kt) {
    if (nt % 2 == 0 && nt > 1 && kt == nt / 2) continue;
    for (int ky = 0; ky < grid.ny; ++ky) {
      for (int kx = 0; kx < grid.nx; ++kx) {
        if (!grid.retained(kx, ky)) continue;
        out.power[out.index(kt, ky, kx)] = mc_power_spectrum(out.freq(kt, ky, kx), p, kind);
      }
    }
  }
  return out;
}

double relative_l2_on_band(const Spectrum3& est, const Spectrum3& ref, double band_fraction) {
  if (est.power.size() != ref.power.size()) throw ConfigError("relative_l2_on_band: shape mismatch");
  const double peak = *std::max_element(ref.power.begin(), ref.power.end());
  if (!(peak > 0.0)) throw DomainError("relative_l2_on_band: reference spectrum is identically zero");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < ref.power.size(); ++i) {
    if (ref.power[i] < band_fraction * peak) continue;
    const double d = est.power[i] - ref.power[i];
    num += d * d;
    den += ref.power[i] * ref.power[i];
  }
  return std::sqrt(num / den);
}

std::vector<double> sample_autocorrelation(std::span<const std::complex<double>> series, int max_lag) {
  const auto n = static_cast<int>(series.size());
  if (max_lag < 0 || max_lag >= n) throw ConfigError("sample_autocorrelation: max_lag out of range");
  std::vector<double> acf(max_lag + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double sum = 0.0;
    for (int t = 0; t + k < n; ++t) sum += (series[t] * std::conj(series[t + k])).real();
    acf[k] = sum / (n - k);
  }
  const double c0 = acf[0];
  if (!(c0 > 0.0)) throw DomainError("sample_autocorrelation: series is identically zero");
  for (double& a : acf) a /= c0;
  return acf;
}

std::vector<double> spatial_covariance(std::span<const FrameStack> stacks, int max_lag) {
  const int w = 2 * max_lag + 1;
  std::vector<double> sum(static_cast<std::size_t>(w) * w, 0.0);
  std::vector<double> count(sum.size(), 0.0);
  for (const FrameStack& s : stacks) {
    const int nx = s.grid.nx;
    const int ny = s.grid.ny;
    if (max_lag >= nx || max_lag >= ny) throw ConfigError("spatial_covariance: max_lag exceeds frame size");
    for (int t = 0; t < s.n_frames; ++t) {
      for (int dy = -max_lag; dy <= max_lag; ++dy) {
        for (int dx = -max_lag; dx <= max_lag; ++dx) {
          double acc = 0.0;
          int pairs = 0;
          for (int y = std::max(0, -dy); y < std::min(ny, ny - dy); ++y) {
            for (int x = std::max(0, -dx); x < std::min(nx, nx - dx); ++x) {
              acc += s.at(t, y, x) * s.at(t, y + dy, x + dx);
              ++pairs;
            }
          }
          const std::size_t k = static_cast<std::size_t>(dy + max_lag) * w + (dx + max_lag);
          sum[k] += acc;
          count[k] += pairs;
        }
      }
    }
  }
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = count[k] > 0 ? sum[k] / count[k] : 0.0;
  return sum;
}

double raw_kurtosis(std::span<const double> values) {
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double v2 = v * v;
    m2 += v2;
    m4 += v2 * v2;
  }
  if (!(m2 > 0.0)) throw DomainError("raw_kurtosis: all values are zero");
  const auto n = static_cast<double>(values.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2);
}

}  // namespace mclab::synth
