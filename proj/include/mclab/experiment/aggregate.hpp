#pragma once

#include <json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mclab/experiment/session.hpp"
#include "mclab/inference/psychometric.hpp"

namespace mclab::experiment {

struct CellCount {
  double du = 0.0;
  double dz = 0.0;
  int n = 0;       // answered trials in the cell
  int k = 0;       // trials where the (u* + du, z*) interval was judged faster
  double phat = 0.0;  // k / n, NaN when n = 0
};

/// Empirical psychometric matrix of one reference condition (u*, z*, t*).
struct PsychometricMatrix {
  double u_star = 0.0;
  double z_star = 0.0;
  double t_star = 0.0;
  std::vector<double> delta_u;
  std::vector<double> delta_z;
  std::vector<CellCount> cells;  // iz-major: cells[iz * delta_u.size() + iu]

  [[nodiscard]] const CellCount& at(int iu, int iz) const { return cells[iz * delta_u.size() + iu]; }
  [[nodiscard]] int n_trials() const;
};

struct AggregateOptions {
  bool include_flagged = false;  // keep trials whose response has timing_flagged set
};

/// Counts answered trials per (du, dz) cell. The sessions must share the
/// reference condition and offsets (ConfigError otherwise); order is irrelevant.
PsychometricMatrix aggregate(std::span<const Session> sessions, const AggregateOptions& options = {});
PsychometricMatrix aggregate(const Session& session, const AggregateOptions& options = {});

/// Columns du,dz,n,phat (phat empty when n = 0).
std::string matrix_to_csv(const PsychometricMatrix& matrix);
nlohmann::json matrix_to_json(const PsychometricMatrix& matrix);

/// Per-z probit fits of one matrix, x = log_speed(u* + du) - log_speed(u*).
struct MatrixFits {
  std::map<double, inference::PsychometricFit> fits;  // keyed by z = z* + dz
  std::map<double, std::string> failures;             // FitError messages by z
};

MatrixFits fit_matrix(const PsychometricMatrix& matrix, const inference::FitOptions& options = {});

/// Points of one dz column, as fed to fit_psychometric.
std::vector<inference::PsychometricPoint> matrix_points(const PsychometricMatrix& matrix, int iz);

}  // namespace mclab::experiment
