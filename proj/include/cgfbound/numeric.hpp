#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace cgfbound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Closed-or-open interval on the extended real line.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  bool bounded_above() const { return std::isfinite(hi); }
  bool bounded_below() const { return std::isfinite(lo); }

  bool contains(double x) const {
    if (std::isnan(x)) return false;
    bool above = lo_closed ? x >= lo : x > lo;
    bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
  bool contains_closure(double x) const { return !std::isnan(x) && x >= lo && x <= hi; }
};

/// Streaming log-sum-exp. Adding -inf is a no-op.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -kInf) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> terms) {
  LogSumExp acc;
  for (double t : terms) acc.add(t);
  return acc.value();
}

/// x * ln(x / y) with the 0 ln 0 = 0 convention.
inline double xlogxy(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return kInf;
  return x * std::log(x / y);
}

struct Extremum {
  double arg = kNaN;
  double value = kNaN;
  int iterations = 0;
};

inline constexpr double kInvGolden = 0.6180339887498949;

/// Golden-section maximization of a unimodal function on [a, b]. Stops when
/// the bracket is narrower than `xtol` or after `max_iter` reductions.
inline Extremum golden_maximize(const std::function<double(double)>& f, double a, double b,
                                double xtol, int max_iter = 300) {
  double c = b - kInvGolden * (b - a);
  double d = a + kInvGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (std::abs(b - a) > xtol && it < max_iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGolden * (b - a);
      fd = f(d);
    }
    ++it;
  }
  return fc >= fd ? Extremum{c, fc, it} : Extremum{d, fd, it};
}

inline Extremum golden_minimize(const std::function<double(double)>& f, double a, double b,
                                double xtol, int max_iter = 300) {
  Extremum e = golden_maximize([&](double x) { return -f(x); }, a, b, xtol, max_iter);
  e.value = -e.value;
  return e;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  std::vector<double> out(steps);
  if (steps == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < steps; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  out.back() = hi;
  return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t steps) {
  std::vector<double> out = linspace(std::log(lo), std::log(hi), steps);
  for (double& x : out) x = std::exp(x);
  if (!out.empty()) {
    out.front() = lo;
    out.back() = hi;
  }
  return out;
}

}  // namespace cgfbound
