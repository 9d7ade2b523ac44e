#include "mclab/core/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "mclab/core/errors.hpp"

namespace mclab {
namespace {

// Kronrod abscissae/weights (15 points) and the embedded 7-point Gauss weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const Integrand& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * fsum;
    if (j % 2 == 1) gauss += kWg[j / 2] * fsum;
  }
  kronrod *= half;
  gauss *= half;
  if (!std::isfinite(kronrod)) {
    std::ostringstream msg;
    msg << "quadrature: non-finite integrand on [" << a << ", " << b << "]";
    throw NumericalError(msg.str());
  }
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadResult integrate(const Integrand& f, double a, double b, const QuadOptions& opts) {
  if (a == b) return {};
  std::priority_queue<Segment> heap;
  heap.push(gauss_kronrod(f, a, b));
  double total = heap.top().value;
  double error = heap.top().error;
  std::size_t count = 1;

  while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (count >= opts.max_intervals) {
      std::ostringstream msg;
      msg << "quadrature did not converge on [" << a << ", " << b << "]: value=" << total
          << " error_estimate=" << error << " intervals=" << count
          << " abs_tol=" << opts.abs_tol;
      throw NumericalError(msg.str());
    }
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval can no longer be split in floating point; accept it.
      heap.push({worst.a, worst.b, worst.value, 0.0});
      error -= worst.error;
      continue;
    }
    const Segment left = gauss_kronrod(f, worst.a, mid);
    const Segment right = gauss_kronrod(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }

  // Re-sum to shed the drift of the incremental updates.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {sum, err, count};
}

QuadResult integrate_to_infinity(const Integrand& f, double a, const QuadOptions& opts) {
  const Integrand mapped = [&f, a](double t) {
    const double s = 1.0 - t;
    if (s <= 0.0) return 0.0;
    const double x = a + t / s;
    const double v = f(x);
    return v == 0.0 ? 0.0 : v / (s * s);
  };
  return integrate(mapped, 0.0, 1.0, opts);
}

QuadResult integrate_real_line(const Integrand& f, double split, const QuadOptions& opts) {
  const QuadResult right = integrate_to_infinity(f, split, opts);
  const Integrand mirrored = [&f, split](double x) { return f(2.0 * split - x); };
  const QuadResult left = integrate_to_infinity(mirrored, split, opts);
  return {left.value + right.value, left.abs_error + right.abs_error,
          left.intervals + right.intervals};
}

}  // namespace mclab
