#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mclab/core/params.hpp"
#include "mclab/inference/observer.hpp"
#include "mclab/synth/frames.hpp"

namespace mclab::inference {

struct MleOptions {
  double u_bound = 50.0;        // search box [-u_bound, u_bound] (deg/s)
  double weight_floor = 1e-6;   // bins with sigma_w^2 below this fraction of the maximum are skipped
  bool drop_hessian = false;    // zero the second-order term (quadratic energy)
  int refine_steps = 2;         // re-expand the residual around the previous estimate this many times
};

enum class MleProvenance { interior_root, boundary };

/// Horizontal speed estimate from the quartic energy
///
///   E(u) = sum_{xi, l} |a + s b + s^2 c|^2 / sigma_w^2 = sum_k coeffs[k] s^k,  s = u - expansion_speed.
struct MleReport {
  double u_hat = 0.0;
  std::array<double, 5> coeffs{};
  double expansion_speed = 0.0;
  MleProvenance provenance = MleProvenance::interior_root;
  std::vector<double> candidates;  // roots of E' inside the box, then the two bounds
  double energy = 0.0;             // E(u_hat)
  int bins_used = 0;
  int frames_used = 0;             // number of second differences per bin
};

/// Evaluates sum_k coeffs[k] s^k.
double quartic_energy(const std::array<double, 5>& coeffs, double s);

/// Quartic energy of a report at speed u.
double report_energy(const MleReport& report, double u);

/// Real roots of c3 u^3 + c2 u^2 + c1 u + c0, ascending. Lower degree when
/// leading coefficients vanish; empty for the zero polynomial.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0);

/// Maximum-likelihood horizontal speed of a stack under the sPDE model
/// of `params` (v0 is ignored).
///
/// Per retained bin, with frames I^{l-1}, I^l, I^{l+1} one frame period d apart
/// and alpha, beta the critically damped coefficients,
///
///   a = (I^{l+1} - 2 I^l + I^{l-1}) / d^2 + alpha (I^l - I^{l-1}) / d + beta I^l
///   b = 2 pi i xi_x ((I^{l+1} - I^{l-1}) / d + alpha I^{l-1})
///   c = -(2 pi xi_x)^2 (I^{l+1} + (1 - alpha d) I^{l-1}) / 2
///
/// which is the second-order expansion in u of the AR(2) residual of the
/// stack unwarped at speed (u, 0). Returns the global minimizer over the
/// real critical points in the box and the box bounds.
///
/// The truncation error grows like (2 pi xi_x u d)^3 relative to the
/// innovations, so the plain quartic is biased toward zero at low frame
/// rates. With refine_steps > 0 the expansion is redone around the current
/// estimate (frames l +- 1 pre-rotated by the corresponding phase), which
/// converges to the minimizer of exact_residual_energy.
///
/// Throws DomainError for fewer than 3 frames and FitError for a stack
/// without signal.
MleReport mle_speed(const synth::FrameStack& stack, const MCParams& params, const MleOptions& options = {});

/// Exact AR(2) residual energy of the stack unwarped at speed (u, 0), the
/// function the quartic approximates. Same bins and weights as mle_speed.
double exact_residual_energy(const synth::FrameStack& stack, const MCParams& params, double u,
                             const MleOptions& options = {});

struct MleStimulus {
  synth::FrameStack stack;
  MCParams params;  // model assumed by the estimator
};

/// Builds the stimulus shown in one interval.
using StimulusFactory = std::function<MleStimulus(const Interval&, std::uint64_t seed)>;

/// Observer variant whose internal measurement is log_speed(max(u_hat, 0))
/// with u_hat = mle_speed on a freshly synthesized stimulus, followed by
/// map_estimate. Interval k of trial t uses seed + 2 t + k.
std::vector<Choice> simulate_observer_mle(std::span<const TrialPair> trials, const ObserverModel& model,
                                          const StimulusFactory& factory, std::uint64_t seed,
                                          const MleOptions& options = {});

}  // namespace mclab::inference
