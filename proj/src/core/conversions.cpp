#include "mclab/core/conversions.hpp"

#include <cmath>
#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab {

FzShape convert_mode_std(double m_z, double d_z) {
  if (!(m_z > 0.0) || !(d_z >= 0.0)) {
    std::ostringstream msg;
    msg << "convert_mode_std: need m_z > 0 and d_z >= 0, got m_z=" << m_z << " d_z=" << d_z;
    throw DomainError(msg.str());
  }
  const double ratio = d_z / m_z;
  if (ratio == 0.0) return {m_z, 0.0};

  const auto p = [ratio](double x) {
    const double q = 1.0 + x * x;
    return x * x * q * q - ratio;
  };
  double lo = 0.0, hi = 1.0;
  while (p(hi) < 0.0) hi *= 2.0;
  // P is increasing on x > 0, so plain bisection converges to the unique root.
  while (hi - lo > 1e-15 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (p(mid) < 0.0 ? lo : hi) = mid;
  }
  const double sigma = 0.5 * (lo + hi);
  return {m_z * (1.0 + sigma * sigma), sigma};
}

FzShape convert_octave(double m_z, double b_z) {
  if (!(m_z > 0.0) || !(b_z >= 0.0)) {
    std::ostringstream msg;
    msg << "convert_octave: need m_z > 0 and b_z >= 0, got m_z=" << m_z << " b_z=" << b_z;
    throw DomainError(msg.str());
  }
  const double sigma = std::sqrt(std::expm1(std::log(2.0) / 8.0 * b_z * b_z));
  return {m_z * (1.0 + sigma * sigma), sigma};
}

double mode_of(const FzShape& s) { return s.z0 / (1.0 + s.sigma_z * s.sigma_z); }

double second_moment_scale_of(const FzShape& s) {
  const double s2 = s.sigma_z * s.sigma_z;
  return s.z0 * s2 * (1.0 + s2);
}

double octave_bandwidth_of(double sigma_z) {
  return std::sqrt(8.0 * std::log1p(sigma_z * sigma_z) / std::log(2.0));
}

DerivedParams derive(const MCParams& params) {
  const FzShape shape{params.z0, params.sigma_z};
  return {mode_of(shape), second_moment_scale_of(shape), octave_bandwidth_of(params.sigma_z),
          1.0 / (params.sigma_r * params.z0)};
}

}  // namespace mclab
