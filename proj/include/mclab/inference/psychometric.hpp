#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mclab/inference/observer.hpp"

namespace mclab::inference {

/// Responses at one speed offset: x = log_speed(u) - log_speed(u_star), n trials,
/// k of which judged the (u, z_star) stimulus faster.
struct PsychometricPoint {
  double x = 0.0;
  int n = 0;
  int k = 0;
};

/// Key of one psychometric curve.
struct Condition {
  double z = 0.0;       // test frequency (c/deg)
  double z_star = 0.0;  // reference frequency (c/deg)
  double u_star = 0.0;  // reference speed (deg/s)
  double t_star = 0.0;  // temporal scale (s)

  friend auto operator<=>(const Condition&, const Condition&) = default;
};

/// Probit fit p = psi((x - mu) / lam) in log-speed units.
struct PsychometricFit {
  Condition condition;
  double mu = 0.0;
  double lam = 0.0;
  double mu_se = 0.0;
  double lam_se = 0.0;
  double mu_lam_cov = 0.0;
  int n_trials = 0;
  double log_likelihood = 0.0;
  double deviance = 0.0;
  bool lam_at_floor = false;
};

struct FitOptions {
  double lambda_floor = 1e-3;
  double lambda_max = 20.0;
  double tolerance = 1e-9;  // on log(lam) and on mu
};

/// Bernoulli log-likelihood of the points under psi((x - mu) / lam).
double probit_log_likelihood(std::span<const PsychometricPoint> points, double mu, double lam);

/// Maximum-likelihood (mu, lam): golden-section search over log(lam) with the
/// concave inner problem in mu solved by bracketed bisection on its
/// derivative. Standard errors from the observed information.
///
/// Throws FitError when fewer than two distinct x are present or every
/// response is identical. A separable dataset drives lam to the floor and
/// sets lam_at_floor (standard errors are then infinite).
PsychometricFit fit_psychometric(std::span<const PsychometricPoint> points, const Condition& condition,
                                 const FitOptions& options = {});

}  // namespace mclab::inference
