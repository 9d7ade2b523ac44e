#include "mclab/core/params.hpp"

#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab {

double wrap_angle(double theta) {
  if (theta >= -kPi && theta < kPi) return theta;
  double w = std::fmod(theta + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  return w >= kPi ? -kPi : w;
}

void MCParams::validate() const {
  std::ostringstream bad;
  const auto need_positive = [&bad](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) bad << " " << name << "=" << v << " (must be > 0)";
  };
  need_positive("z0", z0);
  need_positive("sigma_z", sigma_z);
  need_positive("sigma_theta", sigma_theta);
  need_positive("sigma_r", sigma_r);
  if (!std::isfinite(theta0)) bad << " theta0 not finite";
  if (!std::isfinite(v0[0]) || !std::isfinite(v0[1])) bad << " v0 not finite";
  if (!bad.str().empty()) throw ConfigError("invalid MCParams:" + bad.str());
}

MCParams MCParams::normalized() const {
  MCParams p = *this;
  p.theta0 = wrap_angle(theta0);
  p.validate();
  return p;
}

}  // namespace mclab
