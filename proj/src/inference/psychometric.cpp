#include "mclab/inference/psychometric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab::inference {
namespace {

// Mills ratio phi(t) / Phi(t).
double mills(double t) {
  const double log_phi = -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi);
  return std::exp(log_phi - log_psi(t));
}

// d log L / d eta and d^2 log L / d eta^2 at one point.
struct PointDerivs {
  double g;
  double h;
};

PointDerivs point_derivs(const PsychometricPoint& p, double eta) {
  const double rp = mills(eta);
  const double rm = mills(-eta);
  const double succ = p.k;
  const double fail = p.n - p.k;
  return {succ * rp - fail * rm, -succ * rp * (eta + rp) - fail * rm * (rm - eta)};
}

double dloglik_dmu(std::span<const PsychometricPoint> points, double mu, double lam) {
  double s = 0.0;
  for (const auto& p : points) s += point_derivs(p, (p.x - mu) / lam).g;
  return -s / lam;
}

double best_mu(std::span<const PsychometricPoint> points, double lam, double x_min, double x_max, double tol) {
  double lo = x_min - 40.0 * lam;
  double hi = x_max + 40.0 * lam;
  // The derivative is decreasing in mu, positive at lo and negative at hi.
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (dloglik_dmu(points, mid, lam) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double probit_log_likelihood(std::span<const PsychometricPoint> points, double mu, double lam) {
  double ll = 0.0;
  for (const auto& p : points) {
    const double eta = (p.x - mu) / lam;
    if (p.k > 0) ll += p.k * log_psi(eta);
    if (p.n > p.k) ll += (p.n - p.k) * log_psi(-eta);
  }
  return ll;
}

PsychometricFit fit_psychometric(std::span<const PsychometricPoint> points, const Condition& condition,
                                 const FitOptions& options) {
  std::set<double> levels;
  int total = 0;
  int successes = 0;
  for (const auto& p : points) {
    if (p.n < 0 || p.k < 0 || p.k > p.n) throw FitError("fit_psychometric: invalid counts (need 0 <= k <= n)");
    if (p.n == 0) continue;
    levels.insert(p.x);
    total += p.n;
    successes += p.k;
  }
  if (levels.size() < 2) {
    throw FitError("fit_psychometric: need at least two distinct speed offsets, got " +
                   std::to_string(levels.size()));
  }
  if (successes == 0 || successes == total) {
    std::ostringstream msg;
    msg << "fit_psychometric: degenerate data, all " << total << " responses are "
        << (successes == 0 ? "'slower'" : "'faster'") << " (z=" << condition.z << ")";
    throw FitError(msg.str());
  }
  const double x_min = *levels.begin();
  const double x_max = *levels.rbegin();

  auto profile = [&](double log_lam) {
    const double lam = std::exp(log_lam);
    const double mu = best_mu(points, lam, x_min, x_max, options.tolerance * 1e-3);
    return probit_log_likelihood(points, mu, lam);
  };

  // Golden-section maximization; the profile is unimodal because the probit
  // likelihood is log-concave in (intercept, slope).
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(options.lambda_floor);
  double b = std::log(options.lambda_max);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(c);
  double fd = profile(d);
  while (b - a > options.tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(d);
    }
  }
  double log_lam = 0.5 * (a + b);
  // The ends of the bracket are never evaluated by the interior search.
  if (profile(std::log(options.lambda_floor)) >= profile(log_lam)) log_lam = std::log(options.lambda_floor);

  PsychometricFit fit;
  fit.condition = condition;
  fit.lam = std::exp(log_lam);
  fit.mu = best_mu(points, fit.lam, x_min, x_max, options.tolerance * 1e-3);
  fit.n_trials = total;
  fit.log_likelihood = probit_log_likelihood(points, fit.mu, fit.lam);
  fit.lam_at_floor = fit.lam <= options.lambda_floor * (1.0 + 1e-6);

  // Observed information in (mu, lam).
  double h_mm = 0.0;
  double h_ml = 0.0;
  double h_ll = 0.0;
  const double lam = fit.lam;
  for (const auto& p : points) {
    if (p.n == 0) continue;
    const double eta = (p.x - fit.mu) / lam;
    const auto [g, h] = point_derivs(p, eta);
    const double e_m = -1.0 / lam;
    const double e_l = -eta / lam;
    h_mm += h * e_m * e_m;
    h_ml += h * e_m * e_l + g / (lam * lam);
    h_ll += h * e_l * e_l + g * 2.0 * eta / (lam * lam);
  }
  const double det = h_mm * h_ll - h_ml * h_ml;
  if (fit.lam_at_floor || !(det > 0.0) || !(h_mm < 0.0)) {
    fit.mu_se = fit.lam_se = std::numeric_limits<double>::infinity();
    fit.mu_lam_cov = 0.0;
  } else {
    fit.mu_se = std::sqrt(-h_ll / det);
    fit.lam_se = std::sqrt(-h_mm / det);
    fit.mu_lam_cov = h_ml / det;
  }

  double dev = 0.0;
  for (const auto& p : points) {
    if (p.n == 0) continue;
    const double eta = (p.x - fit.mu) / lam;
    if (p.k > 0) dev += p.k * (std::log(static_cast<double>(p.k) / p.n) - log_psi(eta));
    if (p.n > p.k) dev += (p.n - p.k) * (std::log(static_cast<double>(p.n - p.k) / p.n) - log_psi(-eta));
  }
  fit.deviance = 2.0 * dev;
  return fit;
}

}  // namespace mclab::inference
