#include "mclab/synth/shot_noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "mclab/core/errors.hpp"
#include "mclab/core/ltransform.hpp"

namespace mclab::synth {
namespace {

// Inverse CDF table of the normalized L^-1(h) on [0, kTableMax], with the
// 16 / (3 pi u^4) tail handled analytically.
constexpr double kTableMax = 60.0;
constexpr int kTableSize = 60000;

struct LinvTable {
  std::vector<double> cdf;  // cdf[k] at u = k * step
  double step = kTableMax / kTableSize;
  double mass = 0.0;

  LinvTable() {
    cdf.resize(kTableSize + 1);
    cdf[0] = 0.0;
    for (int k = 0; k < kTableSize; ++k) {
      const double a = k * step;
      const double b = a + step;
      const double simpson = (linv_h(a) + 4.0 * linv_h(0.5 * (a + b)) + linv_h(b)) * step / 6.0;
      cdf[k + 1] = cdf[k] + simpson;
    }
    mass = linv_h_mass();
    for (double& c : cdf) c /= mass;
  }

  [[nodiscard]] double quantile(double p) const {
    if (p >= cdf.back()) {
      // tail mass beyond u is 16 / (9 pi u^3) / mass
      const double tail = (1.0 - p) * mass;
      return std::cbrt(16.0 / (9.0 * kPi * std::max(tail, 1e-300)));
    }
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), p);
    const auto k = static_cast<int>(it - cdf.begin()) - 1;
    const double frac = (p - cdf[k]) / (cdf[k + 1] - cdf[k]);
    return (k + frac) * step;
  }
};

const LinvTable& linv_table() {
  static const LinvTable table;
  return table;
}

}  // namespace

double sample_von_mises(std::mt19937_64& rng, double kappa) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kappa < 1e-8) return kPi * (2.0 * unif(rng) - 1.0);
  if (kappa > 1e6) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(kappa));
    return normal(rng);
  }
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  while (true) {
    const double u1 = unif(rng);
    const double u2 = unif(rng);
    const double u3 = unif(rng);
    const double z = std::cos(kPi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double angle = std::acos(std::clamp(f, -1.0, 1.0));
      return u3 > 0.5 ? angle : -angle;
    }
  }
}

double sample_radial_speed(std::mt19937_64& rng, const MCParams& params, RadialKind kind) {
  switch (kind) {
    case RadialKind::gaussian: {
      std::normal_distribution<double> normal(0.0, params.sigma_r);
      return std::abs(normal(rng));
    }
    case RadialKind::spde_exact: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      return params.sigma_r * linv_table().quantile(unif(rng));
    }
  }
  return 0.0;
}

FrameStack shot_noise_sample(const MCParams& params, const GridSpec& grid, double lambda, int n_frames,
                             std::uint64_t seed, RadialKind kind) {
  grid.validate();
  if (!(lambda > 0.0)) throw ConfigError("shot_noise_sample: lambda must be > 0");
  if (n_frames < 1) throw ConfigError("shot_noise_sample: n_frames must be >= 1");
  const MCParams p = params.normalized();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  std::poisson_distribution<long> poisson(lambda);
  const long count = poisson(rng);

  const double s = std::sqrt(std::log1p(p.sigma_z * p.sigma_z));
  const double kappa = 1.0 / (4.0 * p.sigma_theta * p.sigma_theta);
  const double width = grid.nx / grid.ppd;
  const double height = grid.ny / grid.ppd;

  FrameStack stack(grid, p, seed, n_frames);
  std::vector<std::complex<double>> ex(grid.nx);
  std::vector<std::complex<double>> ey(grid.ny);
  const double amplitude = 1.0 / std::sqrt(lambda);

  for (long k = 0; k < count; ++k) {
    const double z = p.z0 * std::exp(s * normal(rng));
    const double theta = p.theta0 + 0.5 * sample_von_mises(rng, kappa);
    const double r = sample_radial_speed(rng, p, kind);
    const double heading = 2.0 * kPi * unif(rng);
    const double px = width * unif(rng);
    const double py = height * unif(rng);
    const double phi = 2.0 * kPi * unif(rng);
    const Vec2 xi{z * std::cos(theta), z * std::sin(theta)};
    const Vec2 v{p.v0[0] + r * std::cos(heading), p.v0[1] + r * std::sin(heading)};

    for (int c = 0; c < grid.nx; ++c) ex[c] = std::polar(1.0, 2.0 * kPi * xi[0] * c / grid.ppd);
    for (int row = 0; row < grid.ny; ++row) ey[row] = std::polar(1.0, 2.0 * kPi * xi[1] * row / grid.ppd);

    for (int t = 0; t < n_frames; ++t) {
      const double time = t / grid.fps;
      const double offset = -(xi[0] * (px + v[0] * time) + xi[1] * (py + v[1] * time));
      const std::complex<double> base = amplitude * std::polar(1.0, 2.0 * kPi * offset + phi);
      std::span<double> frame = stack.frame(t);
      for (int row = 0; row < grid.ny; ++row) {
        const std::complex<double> b = base * ey[row];
        double* line = frame.data() + static_cast<std::size_t>(row) * grid.nx;
        for (int c = 0; c < grid.nx; ++c) line[c] += (b * ex[c]).real();
      }
    }
  }
  return stack;
}

}  // namespace mclab::synth
