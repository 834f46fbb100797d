#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/rng.hpp"

namespace cgfbound {

/// A CGF t -> Psi(t) together with the t-domain the conjugate is taken over.
struct CgfHandle {
  std::function<double(double)> eval;
  TDomain domain;

  static CgfHandle of(const BoundingFamily& family, double p, Sidedness sided = Sidedness::full) {
    return {[family, p](double t) { return family.cgf(p, t); }, family.t_domain(p, sided)};
  }
};

struct ConjugateResult {
  double value = 0.0;
  double t_star = 0.0;
  bool at_boundary = false;  // supremum approached at an endpoint (finite or infinite)
  bool divergent = false;    // objective unbounded along the expansion
  int evaluations = 0;
};

inline constexpr double kDefaultConjugateTol = 1e-10;

namespace detail {

struct SideSearch {
  double best_t = 0.0;
  double best_value = 0.0;
  bool at_boundary = false;
  bool divergent = false;
};

// Maximizes the concave objective on the ray from 0 toward `end` (sign d).
inline SideSearch search_side(const std::function<double(double)>& objective, double end,
                              bool end_closed, double d, double tol, int& evals) {
  SideSearch out;
  auto f = [&](double t) {
    ++evals;
    double v = objective(t);
    return std::isnan(v) ? -kInf : v;
  };
  const double span = std::abs(end);
  if (span == 0.0) return out;

  const bool infinite = !std::isfinite(end);
  double prev = 0.0, f_prev = 0.0;
  double cur = d * (infinite || span > 2.0 ? 1.0 : span / 2.0);
  double f_cur = f(cur);
  if (!(f_cur > f_prev)) {
    Extremum e = golden_maximize(f, std::min(0.0, cur), std::max(0.0, cur),
                                 1e-13 * std::max(1.0, std::abs(cur)));
    if (e.value > out.best_value) out = {e.arg, e.value, false, false};
    return out;
  }

  for (int step = 0; step < 4000; ++step) {
    double next;
    if (infinite) {
      next = 2.0 * cur;
    } else {
      double gap = end - cur;
      if (std::abs(gap) <= 1e-12 * std::max(1.0, span)) {
        // Still increasing next to the endpoint.
        if (end_closed) {
          double f_end = f(end);
          if (f_end >= f_cur) return {end, f_end, true, false};
          return {cur, f_cur, true, false};
        }
        // Richardson extrapolation toward the open endpoint.
        double h = span;
        double f_old = f(end - d * h);
        double limit = f_old;
        for (int j = 1; j <= 40; ++j) {
          double f_new = f(end - d * std::ldexp(h, -j));
          if (!std::isfinite(f_new)) break;
          limit = 2.0 * f_new - f_old;
          if (std::abs(f_new - f_old) < tol) break;
          f_old = f_new;
        }
        return {end, std::max(limit, f_cur), true, false};
      }
      next = std::abs(2.0 * cur) < span ? 2.0 * cur : cur + gap / 2.0;
    }
    double f_next = f(next);
    if (!(f_next > f_cur)) {
      double a = std::min(prev, next), b = std::max(prev, next);
      Extremum e = golden_maximize(f, a, b, 1e-13 * std::max(1.0, std::abs(cur)));
      if (f_cur > e.value) e = {cur, f_cur, 0};
      return {e.arg, e.value, false, false};
    }
    if (infinite) {
      double gain = f_next - f_cur;
      if (gain < 0.5 * tol) return {next, f_next, true, false};
      if (std::abs(next) > 1e12) return {next, f_next, true, true};
    }
    prev = cur;
    f_prev = f_cur;
    cur = next;
    f_cur = f_next;
  }
  return {cur, f_cur, true, true};
}

}  // namespace detail

/// sup over the handle's t-domain of t*q - Psi(t). The objective is concave in
/// t; each side of 0 is bracketed by expansion and refined by golden section.
inline ConjugateResult numeric_conjugate(const CgfHandle& psi, double q,
                                         double tol = kDefaultConjugateTol) {
  require(tol > 0.0, ErrorCode::domain, "numeric_conjugate: tol must be positive");
  require(std::isfinite(q), ErrorCode::domain, "numeric_conjugate: q must be finite");
  const TDomain& dom = psi.domain;
  require(dom.lower <= 0.0 && dom.upper > 0.0, ErrorCode::domain,
          "numeric_conjugate: t-domain must contain 0");

  auto objective = [&](double t) {
    if (!dom.contains(t)) return -kInf;
    double v = psi.eval(t);
    return std::isfinite(v) ? t * q - v : -kInf;
  };

  ConjugateResult result;
  int evals = 0;
  detail::SideSearch right =
      detail::search_side(objective, dom.upper, dom.upper_closed, 1.0, tol, evals);
  detail::SideSearch left =
      detail::search_side(objective, dom.lower, dom.lower_closed, -1.0, tol, evals);
  const detail::SideSearch& best = right.best_value >= left.best_value ? right : left;
  result.value = std::max(0.0, best.best_value);
  result.t_star = best.best_value > 0.0 ? best.best_t : 0.0;
  result.at_boundary = best.at_boundary;
  result.divergent = right.divergent || left.divergent;
  result.evaluations = evals;
  if (result.divergent) result.value = kInf;
  return result;
}

/// The un-optimized Chernoff exponent t*q - Psi(t).
inline double parametric_value(const CgfHandle& psi, double q, double t) {
  require(psi.domain.contains(t), ErrorCode::domain, "parametric_value: t outside the t-domain");
  return t * q - psi.eval(t);
}

/// Midpoint-convexity spot check of a handle on random triples inside its
/// domain (clipped to a finite window for unbounded sides).
inline bool spot_check_convex(const CgfHandle& psi, int trials, std::uint64_t seed) {
  CounterRng rng(seed, 0x636f6e76);
  double lo = std::isfinite(psi.domain.lower) ? psi.domain.lower : -10.0;
  double hi = std::isfinite(psi.domain.upper) ? psi.domain.upper : 10.0;
  for (int i = 0; i < trials; ++i) {
    double a = lo + (hi - lo) * rng.uniform();
    double b = lo + (hi - lo) * rng.uniform();
    if (!psi.domain.contains(a) || !psi.domain.contains(b)) continue;
    double fa = psi.eval(a), fb = psi.eval(b), fm = psi.eval(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fb)) continue;
    double scale = std::max({1.0, std::abs(fa), std::abs(fb)});
    if (fm > 0.5 * (fa + fb) + 1e-12 * scale) return false;
  }
  return std::abs(psi.eval(0.0)) < 1e-14;
}

}  // namespace cgfbound
