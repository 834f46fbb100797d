#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cgfbound/error.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/rng.hpp"

namespace cgfbound {

enum class FamilyKind {
  bernoulli,
  gaussian,
  poisson,
  gamma,
  laplace,
  inverse_gaussian,
  negative_binomial,
};

/// Which part of the CGF's finiteness interval the sub-(P, T) assumption covers.
enum class Sidedness { full, nonneg_only };

struct TDomain {
  double lower = -kInf;
  double upper = kInf;
  bool upper_closed = false;
  bool lower_closed = false;
  Sidedness sided = Sidedness::full;

  bool contains(double t) const {
    bool above = lower_closed ? t >= lower : t > lower;
    bool below = upper_closed ? t <= upper : t < upper;
    return above && below;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::config, "cannot parse " + std::string(what) + " from '" +
                                       std::string(text) + "'");
  return value;
}

}  // namespace detail

/// A mean-parameterized family {P_r} with at most one fixed nuisance
/// parameter: sigma^2 (Gaussian), shape k (gamma), scale b (Laplace),
/// lambda (inverse Gaussian) or r (negative binomial).
class BoundingFamily {
 public:
  static BoundingFamily bernoulli() { return {FamilyKind::bernoulli, 0.0}; }
  static BoundingFamily gaussian(double sigma2) { return checked(FamilyKind::gaussian, sigma2); }
  static BoundingFamily poisson() { return {FamilyKind::poisson, 0.0}; }
  static BoundingFamily gamma(double shape) { return checked(FamilyKind::gamma, shape); }
  static BoundingFamily laplace(double scale) { return checked(FamilyKind::laplace, scale); }
  static BoundingFamily inverse_gaussian(double lambda) {
    return checked(FamilyKind::inverse_gaussian, lambda);
  }
  static BoundingFamily negative_binomial(double r) {
    return checked(FamilyKind::negative_binomial, r);
  }

  /// Parses `bernoulli`, `gaussian:sigma2=<v>`, `poisson`, `gamma:k=<v>`,
  /// `laplace:b=<v>`, `invgauss:lambda=<v>` or `negbin:r=<v>`.
  static BoundingFamily parse(std::string_view spec) {
    auto colon = spec.find(':');
    std::string_view head = spec.substr(0, colon);
    std::string_view tail = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);

    auto nuisance = [&](std::string_view key) {
      auto eq = tail.find('=');
      if (colon == std::string_view::npos || eq == std::string_view::npos || tail.substr(0, eq) != key)
        throw Error(ErrorCode::config, "family '" + std::string(head) + "' needs '" +
                                           std::string(head) + ":" + std::string(key) + "=<v>'");
      return detail::parse_double(tail.substr(eq + 1), key);
    };
    auto bare = [&] {
      if (colon != std::string_view::npos)
        throw Error(ErrorCode::config, "family '" + std::string(head) + "' takes no parameter");
    };

    if (head == "bernoulli") return bare(), bernoulli();
    if (head == "poisson") return bare(), poisson();
    if (head == "gaussian") return gaussian(nuisance("sigma2"));
    if (head == "gamma") return gamma(nuisance("k"));
    if (head == "laplace") return laplace(nuisance("b"));
    if (head == "invgauss") return inverse_gaussian(nuisance("lambda"));
    if (head == "negbin") return negative_binomial(nuisance("r"));
    throw Error(ErrorCode::config, "unknown family '" + std::string(spec) + "'");
  }

  FamilyKind kind() const { return kind_; }
  double nuisance() const { return nuisance_; }

  std::string spec() const {
    switch (kind_) {
      case FamilyKind::bernoulli: return "bernoulli";
      case FamilyKind::gaussian: return "gaussian:sigma2=" + detail::format_double(nuisance_);
      case FamilyKind::poisson: return "poisson";
      case FamilyKind::gamma: return "gamma:k=" + detail::format_double(nuisance_);
      case FamilyKind::laplace: return "laplace:b=" + detail::format_double(nuisance_);
      case FamilyKind::inverse_gaussian: return "invgauss:lambda=" + detail::format_double(nuisance_);
      case FamilyKind::negative_binomial: return "negbin:r=" + detail::format_double(nuisance_);
    }
    return "?";
  }

  Interval mean_domain() const {
    switch (kind_) {
      case FamilyKind::bernoulli: return {0.0, 1.0, true, true};
      case FamilyKind::gaussian:
      case FamilyKind::laplace: return {-kInf, kInf, false, false};
      default: return {0.0, kInf, false, false};
    }
  }

  bool bounded_loss() const { return kind_ == FamilyKind::bernoulli; }
  bool discrete() const {
    return kind_ == FamilyKind::bernoulli || kind_ == FamilyKind::poisson ||
           kind_ == FamilyKind::negative_binomial;
  }

  /// Interval of t on which the CGF of P_p is finite (full), or its
  /// intersection with [0, inf) (nonneg_only).
  TDomain t_domain(double p, Sidedness sided = Sidedness::full) const {
    check_mean(p, false);
    TDomain d;
    switch (kind_) {
      case FamilyKind::bernoulli:
      case FamilyKind::gaussian:
      case FamilyKind::poisson: break;
      case FamilyKind::gamma: d.upper = nuisance_ / p; break;
      case FamilyKind::laplace:
        d.lower = -1.0 / nuisance_;
        d.upper = 1.0 / nuisance_;
        break;
      case FamilyKind::inverse_gaussian:
        d.upper = nuisance_ / (2.0 * p * p);
        d.upper_closed = true;
        break;
      case FamilyKind::negative_binomial: d.upper = std::log1p(nuisance_ / p); break;
    }
    if (sided == Sidedness::nonneg_only) {
      d.lower = 0.0;
      d.lower_closed = true;
    }
    d.sided = sided;
    return d;
  }

  /// Psi_p(t) = ln E exp(t X), X ~ P_p. +inf outside the finiteness interval.
  double cgf(double p, double t) const {
    check_mean(p, false);
    if (std::isnan(t)) throw Error(ErrorCode::domain, "cgf: t is NaN");
    if (!t_domain(p).contains(t)) return kInf;
    const double v = nuisance_;
    switch (kind_) {
      case FamilyKind::bernoulli: {
        // log1p forms are accurate near t = 0 but round to log1p(-1) when
        // nearly all mass sits on the smaller exponent.
        if (t > 0.0) {
          double w = (1.0 - p) * (-std::expm1(-t));
          if (w <= 0.5) return t + std::log1p(-w);
        } else {
          double w = p * (-std::expm1(t));
          if (w <= 0.5) return std::log1p(-w);
        }
        double terms[2] = {std::log1p(-p), std::log(p) + t};
        return log_sum_exp(terms);
      }
      case FamilyKind::gaussian: return t * p + 0.5 * v * t * t;
      case FamilyKind::poisson: return p * std::expm1(t);
      case FamilyKind::gamma: return -v * std::log1p(-t * p / v);
      case FamilyKind::laplace: return t * p - std::log1p(-v * v * t * t);
      case FamilyKind::inverse_gaussian: {
        double x = 2.0 * p * p * t / v;
        return 2.0 * p * t / (1.0 + std::sqrt(1.0 - x));
      }
      case FamilyKind::negative_binomial: return -v * std::log1p(-p * std::expm1(t) / v);
    }
    return kNaN;
  }

  /// Closed-form Cramer function Psi_p^*(q) (two-sided t-domain).
  double cramer(double q, double p) const {
    check_mean(q, true);
    check_mean(p, true);
    const double v = nuisance_;
    switch (kind_) {
      case FamilyKind::bernoulli: return xlogxy(q, p) + xlogxy(1.0 - q, 1.0 - p);
      case FamilyKind::gaussian: return (q - p) * (q - p) / (2.0 * v);
      case FamilyKind::poisson:
        if (p == 0.0) return q == 0.0 ? 0.0 : kInf;
        return p - q + xlogxy(q, p);
      case FamilyKind::gamma: {
        if (q == p) return 0.0;
        if (q == 0.0 || p == 0.0) return kInf;
        double u = (q - p) / p;
        return v * (u - std::log1p(u));
      }
      case FamilyKind::laplace: {
        double x = (q - p) / v;
        double x2 = x * x;
        double s1 = std::sqrt(1.0 + x2) + 1.0;
        return x2 / s1 - std::log1p(x2 / (2.0 * s1));
      }
      case FamilyKind::inverse_gaussian:
        if (q == p) return 0.0;
        if (q == 0.0 || p == 0.0) return kInf;
        return v * (q - p) * (q - p) / (2.0 * p * p * q);
      case FamilyKind::negative_binomial: {
        if (p == 0.0) return q == 0.0 ? 0.0 : kInf;
        double d = p - q;
        double first = (v + q) * std::log1p(d / (q + v));
        double second = q == 0.0 ? 0.0 : q * std::log1p(d / q);
        return first - second;
      }
    }
    return kNaN;
  }

  /// Draws `out.size()` i.i.d. samples from P_p using `rng`.
  void sample_into(double p, CounterRng& rng, std::span<double> out) const {
    check_mean(p, kind_ == FamilyKind::bernoulli);
    const double v = nuisance_;
    switch (kind_) {
      case FamilyKind::bernoulli:
        for (double& x : out) x = rng.uniform() < p ? 1.0 : 0.0;
        return;
      case FamilyKind::gaussian: {
        std::normal_distribution<double> dist(p, std::sqrt(v));
        for (double& x : out) x = dist(rng);
        return;
      }
      case FamilyKind::poisson: {
        std::poisson_distribution<long long> dist(p);
        for (double& x : out) x = static_cast<double>(dist(rng));
        return;
      }
      case FamilyKind::gamma: {
        std::gamma_distribution<double> dist(v, p / v);
        for (double& x : out) x = dist(rng);
        return;
      }
      case FamilyKind::laplace:
        for (double& x : out) {
          double u = rng.uniform();
          x = u < 0.5 ? p + v * std::log(2.0 * u) : p - v * std::log(2.0 * (1.0 - u));
        }
        return;
      case FamilyKind::inverse_gaussian: {
        // Michael, Schucany and Haas transformation with one rejection step.
        std::normal_distribution<double> normal(0.0, 1.0);
        for (double& x : out) {
          double nu = normal(rng);
          double y = nu * nu;
          double mu = p;
          double cand = mu + mu * mu * y / (2.0 * v) -
                        mu / (2.0 * v) * std::sqrt(4.0 * mu * v * y + mu * mu * y * y);
          x = rng.uniform() <= mu / (mu + cand) ? cand : mu * mu / cand;
        }
        return;
      }
      case FamilyKind::negative_binomial: {
        // Gamma-Poisson mixture: lambda ~ Gamma(r, p/r), X | lambda ~ Poisson(lambda).
        std::gamma_distribution<double> mix(v, p / v);
        for (double& x : out) {
          double lambda = mix(rng);
          if (lambda <= 0.0) {
            x = 0.0;
            continue;
          }
          std::poisson_distribution<long long> pois(lambda);
          x = static_cast<double>(pois(rng));
        }
        return;
      }
    }
  }

  std::vector<double> sample(double p, std::size_t count, std::uint64_t seed,
                             std::uint64_t stream = 0) const {
    std::vector<double> out(count);
    CounterRng rng(seed, stream);
    sample_into(p, rng, out);
    return out;
  }

  bool operator==(const BoundingFamily&) const = default;

 private:
  BoundingFamily(FamilyKind kind, double nuisance) : kind_(kind), nuisance_(nuisance) {}

  static BoundingFamily checked(FamilyKind kind, double nuisance) {
    if (!(nuisance > 0.0) || !std::isfinite(nuisance))
      throw Error(ErrorCode::domain, "family nuisance parameter must be positive and finite");
    return {kind, nuisance};
  }

  void check_mean(double p, bool allow_closure) const {
    Interval dom = mean_domain();
    bool ok = allow_closure ? dom.contains_closure(p) : dom.contains(p);
    // Poisson and negative binomial at mean 0 are the point mass at 0.
    if (!ok && p == 0.0 &&
        (kind_ == FamilyKind::poisson || kind_ == FamilyKind::negative_binomial))
      ok = true;
    if (!ok)
      throw Error(ErrorCode::domain, spec() + ": mean " + detail::format_double(p) +
                                         " outside the mean domain");
  }

  FamilyKind kind_;
  double nuisance_;
};

inline std::vector<BoundingFamily> all_family_kinds_default() {
  return {BoundingFamily::bernoulli(),        BoundingFamily::gaussian(1.0),
          BoundingFamily::poisson(),          BoundingFamily::gamma(5.0),
          BoundingFamily::laplace(1.0),       BoundingFamily::inverse_gaussian(1.0),
          BoundingFamily::negative_binomial(3.0)};
}

}  // namespace cgfbound
