#pragma once

#include <cstddef>
#include <functional>

namespace mclab {

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  std::size_t max_intervals = 4000;
};

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t intervals = 0;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [a, b].
///
/// The interval with the largest error estimate is bisected until the total
/// estimate drops below max(abs_tol, rel_tol * |value|). Throws NumericalError
/// (message carries value, error estimate and interval count) when
/// `max_intervals` is exhausted first.
QuadResult integrate(const Integrand& f, double a, double b, const QuadOptions& opts = {});

/// Integral over [a, +inf) through the map x = a + t / (1 - t).
QuadResult integrate_to_infinity(const Integrand& f, double a, const QuadOptions& opts = {});

/// Integral over the whole real line, split at `split`.
QuadResult integrate_real_line(const Integrand& f, double split = 0.0,
                               const QuadOptions& opts = {});

}  // namespace mclab
