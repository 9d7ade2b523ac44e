#include "mclab/core/ltransform.hpp"

#include <array>
#include <cmath>

#include "mclab/core/params.hpp"

namespace mclab {
namespace {

// pi * linv_h(u) = sum_k c_k w^(2k+4), w = 1/u. Used for u >= kSeriesFrom where the
// closed form cancels catastrophically.
constexpr std::array<double, 9> kSeries = {
    16.0 / 3.0,          -64.0 / 5.0,           768.0 / 35.0,
    -2048.0 / 63.0,      10240.0 / 231.0,       -8192.0 / 143.0,
    458752.0 / 6435.0,   -1048576.0 / 12155.0,  4718592.0 / 46189.0};
constexpr double kSeriesFrom = 20.0;

}  // namespace

double h_profile(double u) {
  const double q = 1.0 + u * u;
  return 1.0 / (q * q);
}

double l_transform(const Integrand& f, double u, const QuadOptions& opts) {
  const Integrand integrand = [&f, u](double phi) {
    const double c = std::cos(phi);
    if (c <= 0.0) return 0.0;
    const double s = u / c;
    if (!std::isfinite(s)) return 0.0;
    return 0.5 * (f(s) + f(-s));
  };
  return integrate(integrand, 0.0, kPi / 2, opts).value;
}

double linv_h(double u) {
  u = std::abs(u);
  if (u == 0.0) return 2.0 / kPi;
  if (u >= kSeriesFrom) {
    const double w2 = 1.0 / (u * u);
    double acc = 0.0;
    for (auto it = kSeries.rbegin(); it != kSeries.rend(); ++it) acc = acc * w2 + *it;
    return acc * w2 * w2 / kPi;
  }
  const double u2 = u * u;
  const double q = 1.0 + u2;
  // log(u) - log(sqrt(u^2+1)+1) == -asinh(1/u)
  return (2.0 - u2) / (kPi * q * q) +
         u2 * (u2 + 4.0) * std::asinh(1.0 / u) / (kPi * std::pow(q, 2.5));
}

double linv_h_mass() {
  static const double mass = [] {
    return integrate_to_infinity([](double u) { return linv_h(u); }, 0.0, {1e-14, 1e-14, 4000})
        .value;
  }();
  return mass;
}

}  // namespace mclab
