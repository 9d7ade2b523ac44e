#pragma once

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

#include "mclab/synth/ar2.hpp"

namespace mclab::app {

enum class ValidationLevel { quick, full };

struct ValidationOptions {
  ValidationLevel level = ValidationLevel::quick;
  synth::SynthOptions fault;   // injected into every synthesized stream (nominal by default)
  std::vector<std::string> only;  // suite ids to run; empty runs all
};

struct SuiteResult {
  std::string id;
  std::string title;
  bool passed = false;
  double metric = 0.0;     // headline statistic compared with `threshold`
  double threshold = 0.0;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json data;     // suite-specific measurements
};

/// Ids of every suite, in execution order.
const std::vector<std::string>& suite_ids();

/// Runs the selected suites; `on_result` is called as each one finishes.
/// Unknown ids in `only` are ConfigErrors.
std::vector<SuiteResult> run_validation(const ValidationOptions& options,
                                        const std::function<void(const SuiteResult&)>& on_result = {});

nlohmann::json validation_report(const std::vector<SuiteResult>& results, ValidationLevel level);

}  // namespace mclab::app
