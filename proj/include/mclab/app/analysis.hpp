#pragma once

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mclab/experiment/aggregate.hpp"
#include "mclab/inference/recovery.hpp"

namespace mclab::app {

/// Fits and observer-model recovery of one reference condition.
struct ConditionAnalysis {
  experiment::PsychometricMatrix matrix;
  experiment::MatrixFits fits;
  std::optional<inference::RecoveryReport> recovery;
  std::string recovery_error;  // set when recovery was impossible
};

/// Fits every dz column and inverts the fits; `a_zstar` empty selects the
/// minimum sum-of-squares rule.
ConditionAnalysis analyze_matrix(const experiment::PsychometricMatrix& matrix, std::optional<double> a_zstar,
                                 const inference::FitOptions& options = {});

/// Groups sessions by (u*, z*, t*) and analyzes each group. Sessions of one
/// group must share offsets. Throws ConfigError if no session has responses.
std::vector<ConditionAnalysis> analyze_sessions(std::span<const experiment::Session> sessions,
                                                std::optional<double> a_zstar,
                                                const experiment::AggregateOptions& aggregate_options = {},
                                                const inference::FitOptions& fit_options = {});

nlohmann::json analysis_to_json(const ConditionAnalysis& analysis);

/// Fitted curves on a log-speed-offset grid plus the empirical points, for plotting.
nlohmann::json plot_data(const ConditionAnalysis& analysis, int n_points = 101);

/// File-name friendly condition label, e.g. "u5_z1.28_t0.1".
std::string condition_label(const experiment::PsychometricMatrix& matrix);

}  // namespace mclab::app
