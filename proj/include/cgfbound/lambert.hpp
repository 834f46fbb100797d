#pragma once

#include <cmath>

#include "cgfbound/error.hpp"

namespace cgfbound {

namespace detail {

// Solves v - ln v = 1 + s for the root v >= 1, i.e. v = -W_{-1}(-exp(-1 - s)).
// Working with s instead of x = -exp(-1 - s) keeps full precision next to the
// branch point, where x itself has already rounded away the information.
inline double wm1_neg_from_offset(double s) {
  if (!(s > 0.0)) return 1.0;
  double v;
  if (s < 2.0) {
    // Branch-point series in q = sqrt(2 (1 + e x)).
    double q = std::sqrt(-2.0 * std::expm1(-s));
    v = 1.0 + q + q * q / 3.0 + 11.0 / 72.0 * q * q * q;
  } else {
    // Asymptotic seed L1 - L2 + L2 / L1 with L1 = ln(-x), L2 = ln(-L1).
    double l2 = std::log1p(s);
    v = (1.0 + s) + l2 + l2 / (1.0 + s);
  }
  const double c = 1.0 + s;
  for (int it = 0; it < 60; ++it) {
    double h = v - std::log(v) - c;
    double h1 = 1.0 - 1.0 / v;
    double h2 = 1.0 / (v * v);
    double denom = 2.0 * h1 * h1 - h * h2;
    if (denom == 0.0) break;
    double step = 2.0 * h * h1 / denom;
    double next = v - step;
    if (next <= 1.0) next = 0.5 * (v + 1.0);
    bool done = std::abs(next - v) <= 4e-16 * next;
    v = next;
    if (done) break;
  }
  return v;
}

}  // namespace detail

/// Lower branch W_{-1}(x) for x in [-1/e, 0), by Halley iteration.
inline double lambert_wm1(double x) {
  require(x >= -std::exp(-1.0) * (1.0 + 1e-15) && x < 0.0, ErrorCode::domain,
          "lambert_wm1: argument outside [-1/e, 0)");
  double s = std::max(0.0, -std::log(-x) - 1.0);
  return -detail::wm1_neg_from_offset(s);
}

/// Largest rho with p - alpha + alpha ln(alpha / rho) <= budget, in closed
/// form: rho = -alpha W_{-1}(-exp(-1 - budget / alpha)).
inline double invert_closed_form_poisson(double alpha, double budget) {
  require(alpha >= 0.0 && std::isfinite(alpha), ErrorCode::domain,
          "invert_closed_form_poisson: alpha must be nonnegative");
  require(budget >= 0.0, ErrorCode::domain, "invert_closed_form_poisson: budget must be >= 0");
  // q = 0 convention: the Cramer function reduces to p.
  if (alpha == 0.0) return budget;
  return alpha * detail::wm1_neg_from_offset(budget / alpha);
}

}  // namespace cgfbound
