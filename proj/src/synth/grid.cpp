#include "mclab/synth/grid.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "mclab/core/errors.hpp"

namespace mclab::synth {
namespace {

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

void GridSpec::validate() const {
  std::ostringstream bad;
  if (!power_of_two(nx)) bad << " nx=" << nx << " (power of two >= 2)";
  if (!power_of_two(ny)) bad << " ny=" << ny << " (power of two >= 2)";
  if (!(ppd > 0.0) || !std::isfinite(ppd)) bad << " ppd=" << ppd << " (must be > 0)";
  if (!(fps > 0.0) || !std::isfinite(fps)) bad << " fps=" << fps << " (must be > 0)";
  if (delta < 0.0 || !std::isfinite(delta)) bad << " delta=" << delta << " (must be >= 0)";
  if (!bad.str().empty()) throw ConfigError("invalid GridSpec:" + bad.str());
  if (delta > 0.0) {
    const double k = frame_period() / delta;
    if (k < 1.0 - 1e-9 || std::abs(k - std::round(k)) > 1e-6 * k) {
      std::ostringstream msg;
      msg << "invalid GridSpec: delta=" << delta << " must be frame_period/k for an integer k >= 1"
          << " (frame_period=" << frame_period() << ")";
      throw ConfigError(msg.str());
    }
  }
}

int GridSpec::substeps() const {
  return delta > 0.0 ? static_cast<int>(std::lround(frame_period() / delta)) : 1;
}

double fft_freq(int k, int n, double rate) {
  const int signed_k = k < (n + 1) / 2 ? k : k - n;
  return signed_k * rate / n;
}

double GridSpec::freq_x(int k) const { return fft_freq(k, nx, ppd); }
double GridSpec::freq_y(int k) const { return fft_freq(k, ny, ppd); }

bool GridSpec::retained(int kx, int ky) const {
  if (kx == 0 && ky == 0) return false;
  return kx != nx / 2 && ky != ny / 2;
}

double GridSpec::min_radius() const {
  return std::min(ppd / nx, ppd / ny);
}

double GridSpec::max_radius() const {
  const double fx = (nx / 2 - 1) * ppd / nx;
  const double fy = (ny / 2 - 1) * ppd / ny;
  if (fx == 0.0 && fy == 0.0) return 0.0;
  return std::hypot(fx, fy);
}

double min_relaxation_time(const MCParams& params, const GridSpec& grid) {
  const double r = grid.max_radius();
  if (r == 0.0) throw ConfigError("GridSpec: no retained frequency (grid too small)");
  return 1.0 / (2.0 * kPi * params.sigma_r * r);
}

double max_relaxation_time(const MCParams& params, const GridSpec& grid) {
  return 1.0 / (2.0 * kPi * params.sigma_r * grid.min_radius());
}

double max_stable_delta(const MCParams& params, const GridSpec& grid) {
  return kMaxStepRatio * min_relaxation_time(params, grid);
}

void check_stability(const MCParams& params, const GridSpec& grid) {
  grid.validate();
  const double limit = max_stable_delta(params, grid);
  if (grid.step() >= limit) {
    std::ostringstream msg;
    msg << "unstable AR(2) configuration: delta=" << grid.step()
        << " s but the maximum admissible delta is " << limit << " s (sigma_r=" << params.sigma_r
        << ", |xi|_max=" << grid.max_radius() << " c/deg); need at least "
        << static_cast<int>(std::ceil(grid.frame_period() / limit * (1.0 + 1e-12)))
        << " steps per frame";
    throw ConfigError(msg.str());
  }
}

GridSpec with_auto_delta(const MCParams& params, GridSpec grid, double target_ratio) {
  if (!(target_ratio > 0.0 && target_ratio < kMaxStepRatio)) {
    throw ConfigError("with_auto_delta: target_ratio must lie in (0, 2 sqrt 2 - 2)");
  }
  grid.delta = 0.0;
  grid.validate();
  const double target = target_ratio * min_relaxation_time(params, grid);
  const double k = std::max(1.0, std::ceil(grid.frame_period() / target));
  grid.delta = grid.frame_period() / k;
  return grid;
}

nlohmann::json grid_to_json(const GridSpec& grid) {
  return {{"nx", grid.nx}, {"ny", grid.ny}, {"ppd", grid.ppd}, {"fps", grid.fps}, {"delta", grid.delta}};
}

GridSpec grid_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("GridSpec: expected a JSON object");
  static const std::set<std::string> known = {"nx", "ny", "ppd", "fps", "delta"};
  GridSpec g;
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("GridSpec: unknown field '" + key + "'");
    if (!value.is_number()) throw ConfigError("GridSpec: field '" + key + "' must be a number");
  }
  if (doc.contains("nx")) g.nx = doc["nx"].get<int>();
  if (doc.contains("ny")) g.ny = doc["ny"].get<int>();
  if (doc.contains("ppd")) g.ppd = doc["ppd"].get<double>();
  if (doc.contains("fps")) g.fps = doc["fps"].get<double>();
  if (doc.contains("delta")) g.delta = doc["delta"].get<double>();
  g.validate();
  return g;
}

}  // namespace mclab::synth
