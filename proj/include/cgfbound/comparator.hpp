#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/rng.hpp"

namespace cgfbound {

enum class ComparatorForm {
  cramer_of,
  binary_kl,
  catoni,
  scaled_diff,
  poisson_diff,
  laplace_diff,
  gaussian_diff,
  parametric,
  custom,
};

/// Delta(q, p) = slope(p) * q + intercept(p). Comparators of this shape have
/// E exp(n Delta(mean(x), r)) = exp(n (intercept(r) + Psi_r(slope(r)))).
struct AffineInQ {
  std::function<double(double)> slope;
  std::function<double(double)> intercept;
};

/// A comparator Delta(q, p) between training loss q and population loss p.
/// `range` is the set of population losses the inversion searches over.
class Comparator {
 public:
  using Eval = std::function<double(double, double)>;

  Comparator(ComparatorForm form, std::string name, Eval eval, Interval range,
             double parameter = kNaN, std::optional<AffineInQ> affine = std::nullopt,
             std::optional<BoundingFamily> family = std::nullopt)
      : form_(form),
        name_(std::move(name)),
        eval_(std::move(eval)),
        range_(range),
        parameter_(parameter),
        affine_(std::move(affine)),
        family_(family) {}

  double operator()(double q, double p) const { return eval_(q, p); }

  ComparatorForm form() const { return form_; }
  const std::string& name() const { return name_; }
  const Interval& range() const { return range_; }
  double parameter() const { return parameter_; }
  const std::optional<AffineInQ>& affine() const { return affine_; }
  const std::optional<BoundingFamily>& family() const { return family_; }

  /// The Cramer function of `family`: the optimal comparator for sub-family losses.
  static Comparator cramer_of(const BoundingFamily& family) {
    return {ComparatorForm::cramer_of, "cramer[" + family.spec() + "]",
            [family](double q, double p) { return family.cramer(q, p); }, closure(family.mean_domain()),
            kNaN, std::nullopt, family};
  }

  static Comparator binary_kl() {
    auto bern = BoundingFamily::bernoulli();
    return {ComparatorForm::binary_kl, "kl",
            [bern](double q, double p) { return bern.cramer(q, p); }, {0.0, 1.0, true, true},
            kNaN, std::nullopt, bern};
  }

  /// C_gamma(q, p) = gamma q - ln(1 - p + p e^gamma). Nondecreasing in p
  /// only for gamma < 0, which is the orientation used for upper bounds.
  static Comparator catoni(double gamma) {
    auto bern = BoundingFamily::bernoulli();
    auto log_mgf = [bern, gamma](double p) { return bern.cgf(p, gamma); };
    return {ComparatorForm::catoni, "catoni[" + detail::format_double(gamma) + "]",
            [gamma, log_mgf](double q, double p) { return gamma * q - log_mgf(p); },
            {0.0, 1.0, true, true}, gamma,
            AffineInQ{[gamma](double) { return gamma; }, [log_mgf](double p) { return -log_mgf(p); }},
            bern};
  }

  /// t (p - q) over the given population-loss range.
  static Comparator scaled_diff(double t, Interval range = {-kInf, kInf, false, false}) {
    return {ComparatorForm::scaled_diff, "scaled[" + detail::format_double(t) + "]",
            [t](double q, double p) { return t * (p - q); }, range, t,
            AffineInQ{[t](double) { return -t; }, [t](double p) { return t * p; }}};
  }

  /// (1 - e^{-t}) p - t q, whose exponential moment under Poisson(p) is 1.
  static Comparator poisson_diff(double t) {
    require(t > 0.0, ErrorCode::domain, "poisson_diff: t must be positive");
    double a = -std::expm1(-t);
    return {ComparatorForm::poisson_diff, "poisson_diff[" + detail::format_double(t) + "]",
            [a, t](double q, double p) { return a * p - t * q; }, {0.0, kInf, true, false}, t,
            AffineInQ{[t](double) { return -t; }, [a](double p) { return a * p; }},
            BoundingFamily::poisson()};
  }

  /// t (p - q) + ln(1 - b^2 t^2): the scaled difference with the Laplace CGF
  /// offset folded in, so its exponential moment under Laplace(p, b) is 1.
  static Comparator laplace_diff(double t, double b) {
    require(t > 0.0 && t * b < 1.0, ErrorCode::domain, "laplace_diff: t must lie in (0, 1/b)");
    double offset = std::log1p(-b * b * t * t);
    return {ComparatorForm::laplace_diff, "laplace_diff[" + detail::format_double(t) + "]",
            [t, offset](double q, double p) { return t * (p - q) + offset; },
            {-kInf, kInf, false, false}, t,
            AffineInQ{[t](double) { return -t; }, [t, offset](double p) { return t * p + offset; }},
            BoundingFamily::laplace(b)};
  }

  /// t (p - q) - sigma^2 t^2 / 2.
  static Comparator gaussian_diff(double t, double sigma2) {
    require(t > 0.0, ErrorCode::domain, "gaussian_diff: t must be positive");
    double offset = -0.5 * sigma2 * t * t;
    return {ComparatorForm::gaussian_diff, "gaussian_diff[" + detail::format_double(t) + "]",
            [t, offset](double q, double p) { return t * (p - q) + offset; },
            {-kInf, kInf, false, false}, t,
            AffineInQ{[t](double) { return -t; }, [t, offset](double p) { return t * p + offset; }},
            BoundingFamily::gaussian(sigma2)};
  }

  /// Delta^t(q, p) = t q - Psi_p(t) for a fixed t.
  static Comparator parametric(const BoundingFamily& family, double t) {
    auto psi = [family, t](double p) { return family.cgf(p, t); };
    return {ComparatorForm::parametric,
            "parametric[" + family.spec() + ",t=" + detail::format_double(t) + "]",
            [t, psi](double q, double p) { return t * q - psi(p); }, closure(family.mean_domain()),
            t, AffineInQ{[t](double) { return t; }, [psi](double p) { return -psi(p); }}, family};
  }

  static Comparator custom(std::string name, Eval eval, Interval range) {
    return {ComparatorForm::custom, std::move(name), std::move(eval), range};
  }

 private:
  static Interval closure(Interval iv) {
    iv.lo_closed = std::isfinite(iv.lo);
    iv.hi_closed = std::isfinite(iv.hi);
    return iv;
  }

  ComparatorForm form_;
  std::string name_;
  Eval eval_;
  Interval range_;
  double parameter_;
  std::optional<AffineInQ> affine_;
  std::optional<BoundingFamily> family_;
};

/// Parses `kl`, `cramer`, `catoni:gamma=<v>`, `scaled:t=<v>`,
/// `poisson_diff:t=<v>`, `laplace_diff:t=<v>`, `gaussian_diff:t=<v>` or
/// `parametric:t=<v>`. Nuisance values (b, sigma^2) and the range of
/// `scaled` come from `family`.
inline Comparator parse_comparator(std::string_view spec, const BoundingFamily& family) {
  auto colon = spec.find(':');
  std::string_view head = spec.substr(0, colon);
  auto param = [&](std::string_view key) {
    std::string_view tail = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
    auto eq = tail.find('=');
    if (eq == std::string_view::npos || tail.substr(0, eq) != key)
      throw Error(ErrorCode::config, "comparator '" + std::string(head) + "' needs '" +
                                         std::string(head) + ":" + std::string(key) + "=<v>'");
    return detail::parse_double(tail.substr(eq + 1), key);
  };
  auto need = [&](FamilyKind k, const char* what) {
    if (family.kind() != k)
      throw Error(ErrorCode::config, std::string(head) + " needs the " + what + " family");
  };
  if (head == "kl") return Comparator::binary_kl();
  if (head == "cramer") return Comparator::cramer_of(family);
  if (head == "catoni") return Comparator::catoni(param("gamma"));
  if (head == "scaled") {
    Interval r = family.mean_domain();
    r.lo_closed = std::isfinite(r.lo);
    r.hi_closed = std::isfinite(r.hi);
    return Comparator::scaled_diff(param("t"), r);
  }
  if (head == "poisson_diff") return Comparator::poisson_diff(param("t"));
  if (head == "laplace_diff") {
    need(FamilyKind::laplace, "laplace");
    return Comparator::laplace_diff(param("t"), family.nuisance());
  }
  if (head == "gaussian_diff") {
    need(FamilyKind::gaussian, "gaussian");
    return Comparator::gaussian_diff(param("t"), family.nuisance());
  }
  if (head == "parametric") return Comparator::parametric(family, param("t"));
  throw Error(ErrorCode::config, "unknown comparator '" + std::string(spec) + "'");
}

/// Midpoint-convexity spot check of (q, p) -> Delta(q, p) on random pairs in
/// [lo, hi]^2. Non-finite values are skipped.
inline bool spot_check_convex(const Comparator& comp, double lo, double hi, int trials,
                              std::uint64_t seed) {
  CounterRng rng(seed, 0x636d70);
  for (int i = 0; i < trials; ++i) {
    double q1 = lo + (hi - lo) * rng.uniform(), p1 = lo + (hi - lo) * rng.uniform();
    double q2 = lo + (hi - lo) * rng.uniform(), p2 = lo + (hi - lo) * rng.uniform();
    double f1 = comp(q1, p1), f2 = comp(q2, p2);
    if (!std::isfinite(f1) || !std::isfinite(f2)) continue;
    double fm = comp(0.5 * (q1 + q2), 0.5 * (p1 + p2));
    double scale = std::max({1.0, std::abs(f1), std::abs(f2)});
    if (fm > 0.5 * (f1 + f2) + 1e-10 * scale) return false;
  }
  return true;
}

}  // namespace cgfbound
