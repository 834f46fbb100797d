#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cgfbound/comparator.hpp"
#include "cgfbound/corrections.hpp"
#include "cgfbound/error.hpp"
#include "cgfbound/lambert.hpp"
#include "cgfbound/numeric.hpp"

namespace cgfbound {

/// The log-correction iota(n) entering the budget as ln(iota).
struct LogCorrection {
  enum class Kind { one, explicit_value, mls_sqrt, xi, two_e_ceil, chernoff };

  Kind kind = Kind::one;
  double value = 1.0;  // iota for explicit_value, u for two_e_ceil, ln Upsilon for chernoff

  static LogCorrection one() { return {Kind::one, 1.0}; }
  static LogCorrection explicit_value(double iota) { return {Kind::explicit_value, iota}; }
  static LogCorrection mls_sqrt() { return {Kind::mls_sqrt, 0.0}; }
  static LogCorrection xi() { return {Kind::xi, 0.0}; }
  static LogCorrection two_e_ceil(double u) { return {Kind::two_e_ceil, u}; }
  static LogCorrection chernoff(double ln_upsilon) { return {Kind::chernoff, ln_upsilon}; }

  /// ln(iota) for the given sample count, training loss and divergence.
  double log_value(std::int64_t n, double alpha, double beta) const {
    switch (kind) {
      case Kind::one: return 0.0;
      case Kind::explicit_value:
        require(value > 0.0, ErrorCode::domain, "explicit iota must be positive");
        return std::log(value);
      case Kind::mls_sqrt: return std::log(2.0 * std::sqrt(static_cast<double>(n)));
      case Kind::xi:
        // Losses on the real line can give n * alpha < 0; the training-loss
        // route of Xi only covers nonnegative values, so it is clamped.
        return std::log(correction_xi(std::max(0.0, static_cast<double>(n) * alpha), beta));
      case Kind::two_e_ceil: return std::log(correction_two_e_ceil(value));
      case Kind::chernoff:
        if (!(value < kInf))
          throw Error(ErrorCode::correction_divergent, "ln Upsilon is not finite");
        return value;
    }
    return kNaN;
  }
};

struct BoundQuery {
  double alpha = 0.0;
  double beta = 0.0;
  std::int64_t n = 1;
  std::optional<double> delta;  // absent: average (in-expectation) bound
  LogCorrection iota = LogCorrection::one();

  /// (beta + ln iota - ln delta) / n, without the delta term for average bounds.
  double budget() const {
    require(n >= 1, ErrorCode::domain, "n must be a positive integer");
    require(beta >= 0.0 && !std::isnan(beta), ErrorCode::domain, "beta must be nonnegative");
    double numer = beta + iota.log_value(n, alpha, beta);
    if (delta) {
      require(*delta > 0.0 && *delta < 1.0, ErrorCode::domain, "delta must lie in (0, 1)");
      numer -= std::log(*delta);
    }
    return numer / static_cast<double>(n);
  }
};

enum class InversionStatus { converged, capped_at_domain, budget_nonpositive };

inline const char* to_string(InversionStatus s) {
  switch (s) {
    case InversionStatus::converged: return "converged";
    case InversionStatus::capped_at_domain: return "capped_at_domain";
    case InversionStatus::budget_nonpositive: return "budget_nonpositive";
  }
  return "?";
}

struct BoundResult {
  double rho = kNaN;
  double budget = kNaN;
  double bracket_lo = kNaN;
  double bracket_hi = kNaN;
  int iterations = 0;
  InversionStatus status = InversionStatus::converged;
  bool reference_only = false;
  std::optional<double> parameter;  // optimizing parameter for infimum bounds
};

inline constexpr double kDefaultInversionTol = 1e-9;

/// Largest rho in the comparator's range with Delta(alpha, rho) <= budget.
/// Requires Delta(alpha, .) nondecreasing above alpha; checked by a 3-point probe.
inline BoundResult invert_budget(const Comparator& comp, double alpha, double budget,
                                 double tol = kDefaultInversionTol) {
  require(tol > 0.0, ErrorCode::domain, "invert: tol must be positive");
  const Interval& range = comp.range();
  require(range.contains_closure(alpha), ErrorCode::domain,
          comp.name() + ": training loss outside the loss range");
  require(!std::isnan(budget), ErrorCode::domain, "invert: budget is NaN");
  if (budget == kInf) throw Error(ErrorCode::no_finite_bound, comp.name() + ": infinite budget");

  BoundResult out;
  out.budget = budget;
  const double e0 = comp(alpha, alpha);
  require(std::isfinite(e0), ErrorCode::domain,
          comp.name() + ": comparator not finite at (alpha, alpha)");

  const bool bounded = range.bounded_above();
  if (bounded && alpha >= range.hi) {
    out.rho = out.bracket_lo = out.bracket_hi = range.hi;
    out.status = InversionStatus::capped_at_domain;
    return out;
  }

  {
    double w = bounded ? (range.hi - alpha) : std::max(1.0, std::abs(alpha));
    double e1 = comp(alpha, alpha + 0.25 * w);
    double e2 = comp(alpha, alpha + 0.5 * w);
    double slack = 1e-12 * std::max({1.0, std::abs(e0), std::abs(e1)});
    if (!(e1 >= e0 - slack) || !(e2 >= e1 - slack))
      throw Error(ErrorCode::non_monotone,
                  comp.name() + ": comparator decreases in p above the training loss");
  }

  if (e0 > budget || (budget <= 0.0 && e0 >= budget)) {
    out.rho = out.bracket_lo = out.bracket_hi = alpha;
    out.status = InversionStatus::budget_nonpositive;
    return out;
  }

  double lo = alpha;
  double hi;
  if (bounded) {
    hi = range.hi;
    if (comp(alpha, hi) <= budget) {
      out.rho = out.bracket_lo = out.bracket_hi = hi;
      out.status = InversionStatus::capped_at_domain;
      return out;
    }
  } else {
    double w = std::max(std::abs(alpha), 1e-12);
    hi = alpha + w;
    int doublings = 0;
    while (comp(alpha, hi) <= budget) {
      lo = hi;
      if (++doublings > 200)
        throw Error(ErrorCode::no_finite_bound, comp.name() + ": bracket expansion exhausted");
      w *= 2.0;
      hi = alpha + w;
    }
  }

  int it = 0;
  auto width_ok = [&] {
    double scale = bounded ? 1.0 : std::max(1.0, std::abs(lo));
    return hi - lo <= tol * scale;
  };
  while (!width_ok() && it < 2000) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (comp(alpha, mid) <= budget) lo = mid;
    else hi = mid;
    ++it;
  }
  out.rho = lo;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.iterations = it;
  out.status = InversionStatus::converged;
  return out;
}

/// B (with delta) or B-hat (without): inversion of Delta(alpha, rho) against
/// the query's budget.
inline BoundResult invert(const Comparator& comp, const BoundQuery& query,
                          double tol = kDefaultInversionTol) {
  return invert_budget(comp, query.alpha, query.budget(), tol);
}

/// Search interval for a one-parameter comparator family.
struct ParamRange {
  double lo = 1e-3;
  double hi = 50.0;
  bool log_scale = true;
  int grid_points = 64;
};

/// min over the parameter of invert(make(param), query): grid scan followed by
/// golden-section refinement around the grid minimum.
inline BoundResult infimum_over_parameter(const std::function<Comparator(double)>& make,
                                          const BoundQuery& query, const ParamRange& range,
                                          double tol = kDefaultInversionTol) {
  require(range.lo < range.hi && range.grid_points >= 3, ErrorCode::domain,
          "infimum_over_parameter: bad parameter range");
  std::vector<double> grid = range.log_scale ? logspace(range.lo, range.hi, range.grid_points)
                                             : linspace(range.lo, range.hi, range.grid_points);
  const double budget = query.budget();

  auto bound_at = [&](double param) -> std::optional<BoundResult> {
    try {
      BoundResult r = invert_budget(make(param), query.alpha, budget, tol);
      r.parameter = param;
      return r;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::no_finite_bound) return std::nullopt;
      throw;
    }
  };

  std::optional<BoundResult> best;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto r = bound_at(grid[i]);
    if (r && (!best || r->rho < best->rho)) {
      best = r;
      best_i = i;
    }
  }
  if (!best) throw Error(ErrorCode::no_finite_bound, "no parameter yields a finite bound");

  std::size_t a = best_i == 0 ? 0 : best_i - 1;
  std::size_t b = std::min(grid.size() - 1, best_i + 1);
  auto to_x = [&](double v) { return range.log_scale ? std::log(v) : v; };
  auto from_x = [&](double x) { return range.log_scale ? std::exp(x) : x; };
  auto objective = [&](double x) {
    auto r = bound_at(from_x(x));
    return r ? r->rho : kInf;
  };
  double xa = to_x(grid[a]), xb = to_x(grid[b]);
  Extremum e = golden_minimize(objective, xa, xb, 1e-10 * std::max(1.0, std::abs(xb - xa)), 200);
  if (e.value < best->rho) {
    auto r = bound_at(from_x(e.arg));
    if (r && r->rho < best->rho) best = r;
  }
  return *best;
}

}  // namespace cgfbound
