#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mclab/inference/observer.hpp"
#include "mclab/inference/psychometric.hpp"

namespace mclab::inference {

struct RecoveredParams {
  double z = 0.0;
  double sigma = 0.0;
  double a = 0.0;
  double sigma_se = 0.0;
  double a_se = 0.0;  // with a_zstar held fixed
  bool valid = true;
  std::string note;
};

struct RecoveryReport {
  ObserverModel model;  // valid conditions only
  double z_star = 0.0;
  double a_zstar = 0.0;
  bool a_zstar_auto = false;
  std::vector<RecoveredParams> entries;  // every input condition, ascending z
  std::vector<std::string> warnings;
};

/// Inverts the closed-form psychometric curve:
///
///   sigma_z^2 = lam_z^2 - lam_*^2 / 2,   sigma_*^2 = lam_*^2 / 2,
///   a_z = (a_* sigma_*^2 - mu_z) / sigma_z^2,
///
/// where lam_*, mu_* come from the reference fit at z = z_star. Without an
/// explicit a_zstar, picks the value minimizing sum_z a_z^2 over the valid
/// conditions (a one-dimensional least-squares problem).
///
/// Conditions with sigma_z^2 <= 0 are flagged invalid, left out of the model
/// and reported in `warnings`. Throws FitError if the reference fit is missing.
RecoveryReport recover_prior_likelihood(const std::map<double, PsychometricFit>& fits_by_z, double z_star,
                                        std::optional<double> a_zstar = std::nullopt, double u_max = 20.0);

/// Fits implied by a model through the closed form: mu = a_* s_*^2 - a_z s_z^2
/// and lam = sqrt(s_*^2 + s_z^2), with zero standard errors.
std::map<double, PsychometricFit> forward_fits(const ObserverModel& model, double z_star, double u_star = 0.0,
                                               double t_star = 0.0);

}  // namespace mclab::inference
