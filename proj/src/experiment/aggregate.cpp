#include "mclab/experiment/aggregate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab::experiment {

int PsychometricMatrix::n_trials() const {
  int n = 0;
  for (const auto& c : cells) n += c.n;
  return n;
}

PsychometricMatrix aggregate(std::span<const Session> sessions, const AggregateOptions& options) {
  if (sessions.empty()) throw ConfigError("aggregate: no sessions");
  const ExperimentConfig& c0 = sessions.front().config();
  PsychometricMatrix m;
  m.u_star = c0.u_star;
  m.z_star = c0.z_star;
  m.t_star = c0.t_star;
  m.delta_u = c0.delta_u;
  m.delta_z = c0.delta_z;
  for (std::size_t iz = 0; iz < m.delta_z.size(); ++iz) {
    for (std::size_t iu = 0; iu < m.delta_u.size(); ++iu) m.cells.push_back({m.delta_u[iu], m.delta_z[iz], 0, 0, 0.0});
  }
  for (const Session& s : sessions) {
    const ExperimentConfig& c = s.config();
    if (c.u_star != m.u_star || c.z_star != m.z_star || c.t_star != m.t_star || c.delta_u != m.delta_u ||
        c.delta_z != m.delta_z) {
      throw ConfigError("aggregate: session " + s.id() + " has a different reference condition or offsets");
    }
    for (const auto& t : s.trials()) {
      if (!t.response) continue;
      if (t.response->timing_flagged && !options.include_flagged) continue;
      CellCount& cell = m.cells[t.iz * m.delta_u.size() + t.iu];
      ++cell.n;
      cell.k += t.u_offset_judged_faster();
    }
  }
  for (auto& cell : m.cells) {
    cell.phat = cell.n > 0 ? static_cast<double>(cell.k) / cell.n : std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

PsychometricMatrix aggregate(const Session& session, const AggregateOptions& options) {
  return aggregate(std::span<const Session>(&session, 1), options);
}

std::string matrix_to_csv(const PsychometricMatrix& m) {
  std::ostringstream out;
  out.precision(15);
  out << "du,dz,n,phat\n";
  for (const auto& c : m.cells) {
    out << c.du << ',' << c.dz << ',' << c.n << ',';
    if (c.n > 0) out << c.phat;
    out << '\n';
  }
  return out.str();
}

nlohmann::json matrix_to_json(const PsychometricMatrix& m) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : m.cells) {
    cells.push_back({{"du", c.du},
                     {"dz", c.dz},
                     {"n", c.n},
                     {"k", c.k},
                     {"phat", c.n > 0 ? nlohmann::json(c.phat) : nlohmann::json(nullptr)}});
  }
  return {{"u_star", m.u_star}, {"z_star", m.z_star}, {"t_star", m.t_star},
          {"delta_u", m.delta_u}, {"delta_z", m.delta_z}, {"n_trials", m.n_trials()},
          {"cells", cells}};
}

std::vector<inference::PsychometricPoint> matrix_points(const PsychometricMatrix& m, int iz) {
  std::vector<inference::PsychometricPoint> pts;
  const double ref = inference::log_speed(m.u_star);
  for (std::size_t iu = 0; iu < m.delta_u.size(); ++iu) {
    const CellCount& c = m.at(static_cast<int>(iu), iz);
    pts.push_back({inference::log_speed(m.u_star + c.du) - ref, c.n, c.k});
  }
  return pts;
}

MatrixFits fit_matrix(const PsychometricMatrix& m, const inference::FitOptions& options) {
  MatrixFits out;
  for (std::size_t iz = 0; iz < m.delta_z.size(); ++iz) {
    const double z = m.z_star + m.delta_z[iz];
    const inference::Condition cond{z, m.z_star, m.u_star, m.t_star};
    try {
      out.fits[z] = inference::fit_psychometric(matrix_points(m, static_cast<int>(iz)), cond, options);
    } catch (const FitError& e) {
      out.failures[z] = e.what();
    }
  }
  return out;
}

}  // namespace mclab::experiment
