#include "mclab/inference/recovery.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "mclab/core/errors.hpp"

namespace mclab::inference {
namespace {

const PsychometricFit* find_fit(const std::map<double, PsychometricFit>& fits, double z) {
  for (const auto& [key, fit] : fits) {
    if (std::abs(key - z) <= 1e-9 * std::max(1.0, std::abs(z))) return &fit;
  }
  return nullptr;
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

RecoveryReport recover_prior_likelihood(const std::map<double, PsychometricFit>& fits_by_z, double z_star,
                                        std::optional<double> a_zstar, double u_max) {
  const PsychometricFit* ref = find_fit(fits_by_z, z_star);
  if (ref == nullptr) {
    std::ostringstream msg;
    msg << "recover_prior_likelihood: no fit at the reference frequency z*=" << z_star;
    throw FitError(msg.str());
  }
  const double lam_s = ref->lam;
  const double s2_star = 0.5 * lam_s * lam_s;
  if (!(s2_star > 0.0)) throw FitError("recover_prior_likelihood: reference width must be positive");

  RecoveryReport report;
  report.z_star = z_star;
  report.model.u_max = u_max;

  struct Work {
    double z;
    const PsychometricFit* fit;
    bool is_ref;
    double s2;
  };
  std::vector<Work> work;
  for (const auto& [z, fit] : fits_by_z) {
    const bool is_ref = &fit == ref;
    const double s2 = is_ref ? s2_star : fit.lam * fit.lam - s2_star;
    work.push_back({z, &fit, is_ref, s2});
  }

  if (a_zstar) {
    report.a_zstar = *a_zstar;
  } else {
    // a_z = c_z a_* + d_z is affine in a_*; minimize the sum of squares.
    double num = 0.0;
    double den = 0.0;
    for (const auto& w : work) {
      if (!(w.s2 > 0.0)) continue;
      const double c = s2_star / w.s2;
      const double d = -w.fit->mu / w.s2;
      num += c * d;
      den += c * c;
    }
    report.a_zstar = -num / den;
    report.a_zstar_auto = true;
  }
  const double a_s = report.a_zstar;

  for (const auto& w : work) {
    RecoveredParams r;
    r.z = w.z;
    if (!(w.s2 > 0.0)) {
      r.valid = false;
      std::ostringstream msg;
      msg << "z=" << w.z << ": lam=" << w.fit->lam << " is below lam*/sqrt(2)=" << lam_s / std::sqrt(2.0)
          << ", sigma_z^2=" << w.s2 << " <= 0; condition excluded";
      r.note = msg.str();
      report.warnings.push_back(r.note);
      r.sigma = r.a = std::nan("");
      r.sigma_se = r.a_se = std::nan("");
      report.entries.push_back(r);
      continue;
    }
    r.sigma = std::sqrt(w.s2);
    r.a = (a_s * s2_star - w.fit->mu) / w.s2;

    // Delta method over (mu_z, lam_z, lam_*). Distinct conditions come from
    // independent fits; the reference condition reuses a single fit.
    const double mu_var = std::pow(finite_or_zero(w.fit->mu_se), 2);
    const double lam_var = std::pow(finite_or_zero(w.fit->lam_se), 2);
    const double ref_var = std::pow(finite_or_zero(ref->lam_se), 2);
    const double cov_ml = finite_or_zero(w.fit->mu_lam_cov);
    if (w.is_ref) {
      const double ds2 = lam_s;  // d sigma*^2 / d lam*
      const double ds_dl = ds2 / (2.0 * r.sigma);
      const double da_dmu = -1.0 / w.s2;
      const double da_dl = (a_s * ds2 - r.a * ds2) / w.s2;
      r.sigma_se = std::sqrt(ds_dl * ds_dl * lam_var);
      r.a_se = std::sqrt(da_dmu * da_dmu * mu_var + da_dl * da_dl * lam_var + 2.0 * da_dmu * da_dl * cov_ml);
    } else {
      const double lam_z = w.fit->lam;
      const double ds_dlz = 2.0 * lam_z / (2.0 * r.sigma);
      const double ds_dls = -lam_s / (2.0 * r.sigma);
      const double da_dmu = -1.0 / w.s2;
      const double da_dlz = -r.a * 2.0 * lam_z / w.s2;
      const double da_dls = (a_s * lam_s + r.a * lam_s) / w.s2;
      r.sigma_se = std::sqrt(ds_dlz * ds_dlz * lam_var + ds_dls * ds_dls * ref_var);
      r.a_se = std::sqrt(da_dmu * da_dmu * mu_var + da_dlz * da_dlz * lam_var + 2.0 * da_dmu * da_dlz * cov_ml +
                         da_dls * da_dls * ref_var);
    }
    if (!std::isfinite(w.fit->mu_se) || !std::isfinite(w.fit->lam_se) || !std::isfinite(ref->lam_se)) {
      r.sigma_se = r.a_se = std::numeric_limits<double>::infinity();
      r.note = "width at the fitting floor; standard errors undefined";
    }
    report.model.set(w.z, r.sigma, r.a);
    report.entries.push_back(r);
  }
  return report;
}

std::map<double, PsychometricFit> forward_fits(const ObserverModel& model, double z_star, double u_star,
                                               double t_star) {
  const double s_star = model.sigma(z_star);
  const double a_star = model.a(z_star);
  std::map<double, PsychometricFit> out;
  for (const auto& [z, s] : model.sigma_by_z) {
    PsychometricFit f;
    f.condition = {z, z_star, u_star, t_star};
    f.mu = a_star * s_star * s_star - model.a(z) * s * s;
    f.lam = std::sqrt(s_star * s_star + s * s);
    out[z] = f;
  }
  return out;
}

}  // namespace mclab::inference
