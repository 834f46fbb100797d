#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgfbound/comparator.hpp"
#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/inversion.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/parallel.hpp"
#include "cgfbound/upsilon.hpp"

namespace cgfbound {

enum class BoundKind {
  average_cramer,
  pac_cramer_chernoff,
  pac_cramer_xi,
  pac_cramer_two_e_ceil,
  catoni_inf,
  mls,
  poisson_diff_inf,
  laplace_diff_inf,
  gaussian_diff_inf,
  samplewise_average,
  optimistic_reference,
};

inline constexpr std::pair<BoundKind, std::string_view> kBoundKindNames[] = {
    {BoundKind::average_cramer, "average_cramer"},
    {BoundKind::pac_cramer_chernoff, "pac_cramer_chernoff"},
    {BoundKind::pac_cramer_xi, "pac_cramer_xi"},
    {BoundKind::pac_cramer_two_e_ceil, "pac_cramer_two_e_ceil"},
    {BoundKind::catoni_inf, "catoni_inf"},
    {BoundKind::mls, "mls"},
    {BoundKind::poisson_diff_inf, "poisson_diff_inf"},
    {BoundKind::laplace_diff_inf, "laplace_diff_inf"},
    {BoundKind::gaussian_diff_inf, "gaussian_diff_inf"},
    {BoundKind::samplewise_average, "samplewise_average"},
    {BoundKind::optimistic_reference, "optimistic_reference"},
};

inline std::string_view to_string(BoundKind kind) {
  for (const auto& [k, name] : kBoundKindNames)
    if (k == kind) return name;
  return "?";
}

inline BoundKind parse_bound_kind(std::string_view text) {
  for (const auto& [k, name] : kBoundKindNames)
    if (name == text) return k;
  throw Error(ErrorCode::config, "unknown bound kind '" + std::string(text) + "'");
}

/// Average kinds take no delta; PAC kinds need one; the rest accept either.
inline bool is_average_kind(BoundKind k) {
  return k == BoundKind::average_cramer || k == BoundKind::samplewise_average;
}
inline bool is_pac_kind(BoundKind k) {
  return k == BoundKind::pac_cramer_chernoff || k == BoundKind::pac_cramer_xi ||
         k == BoundKind::pac_cramer_two_e_ceil || k == BoundKind::mls;
}

/// Families whose Cramer comparator has an unbounded Upsilon.
inline bool cramer_upsilon_divergent(const BoundingFamily& family) {
  switch (family.kind()) {
    case FamilyKind::gaussian:
    case FamilyKind::poisson:
    case FamilyKind::gamma:
    case FamilyKind::inverse_gaussian:
    case FamilyKind::negative_binomial: return true;
    default: return false;
  }
}

inline BoundResult average_bound(const BoundingFamily& family, double alpha, double beta,
                                 std::int64_t n, double tol = kDefaultInversionTol) {
  BoundQuery q{alpha, beta, n, std::nullopt, LogCorrection::one()};
  return invert(Comparator::cramer_of(family), q, tol);
}

/// PAC-Bayesian Cramer bound with budget (beta + ln(iota / delta)) / n.
inline BoundResult pac_bound(const BoundingFamily& family, double alpha, double beta,
                             std::int64_t n, double delta, const LogCorrection& correction,
                             double tol = kDefaultInversionTol) {
  if (correction.kind == LogCorrection::Kind::chernoff && cramer_upsilon_divergent(family))
    throw Error(ErrorCode::correction_divergent,
                family.spec() + ": Upsilon of the Cramer comparator is unbounded; use xi or two_e_ceil");
  BoundQuery q{alpha, beta, n, delta, correction};
  return invert(Comparator::cramer_of(family), q, tol);
}

/// Cramer bound with iota = 1: the lower envelope of all comparator bounds.
/// Not a certified bound.
inline BoundResult optimistic_reference(const BoundingFamily& family, double alpha, double beta,
                                        std::int64_t n, std::optional<double> delta = std::nullopt,
                                        double tol = kDefaultInversionTol) {
  BoundQuery q{alpha, beta, n, delta, LogCorrection::one()};
  BoundResult r = invert(Comparator::cramer_of(family), q, tol);
  r.reference_only = true;
  return r;
}

/// Binary-kl bound with the ln(2 sqrt n) correction.
inline BoundResult mls_bound(double alpha, double beta, std::int64_t n, double delta,
                             double tol = kDefaultInversionTol) {
  BoundQuery q{alpha, beta, n, delta, LogCorrection::mls_sqrt()};
  return invert(Comparator::binary_kl(), q, tol);
}

/// inf over gamma > 0 of the Catoni bound with comparator C_{-gamma}.
inline BoundResult catoni_inf_bound(double alpha, double beta, std::int64_t n,
                                    std::optional<double> delta = std::nullopt,
                                    ParamRange range = {1e-3, 50.0, true, 64},
                                    double tol = kDefaultInversionTol) {
  BoundQuery q{alpha, beta, n, delta, LogCorrection::one()};
  BoundResult r = infimum_over_parameter(
      [](double g) { return Comparator::catoni(-g); }, q, range, tol);
  r.reference_only = true;
  return r;
}

enum class DiffKind { poisson, laplace, gaussian };

/// Parameter range searched by the difference-based bounds.
inline ParamRange diff_param_range(DiffKind kind, double param) {
  switch (kind) {
    case DiffKind::poisson: return {1e-9, 100.0, true, 64};
    case DiffKind::laplace: return {1e-6 / param, (1.0 - 1e-9) / param, true, 64};
    case DiffKind::gaussian: return {1e-6, 1e4, true, 64};
  }
  return {};
}

/// inf over t of the bound from the difference comparator of the given kind.
/// `param` is b for laplace and sigma^2 for gaussian; ignored for poisson.
inline BoundResult diff_based_bound(DiffKind kind, double param, double alpha, double beta,
                                    std::int64_t n, std::optional<double> delta = std::nullopt,
                                    double tol = kDefaultInversionTol) {
  BoundQuery q{alpha, beta, n, delta, LogCorrection::one()};
  std::function<Comparator(double)> make;
  switch (kind) {
    case DiffKind::poisson: make = [](double t) { return Comparator::poisson_diff(t); }; break;
    case DiffKind::laplace:
      require(param > 0.0, ErrorCode::domain, "laplace_diff: b must be positive");
      make = [param](double t) { return Comparator::laplace_diff(t, param); };
      break;
    case DiffKind::gaussian:
      require(param > 0.0, ErrorCode::domain, "gaussian_diff: sigma2 must be positive");
      make = [param](double t) { return Comparator::gaussian_diff(t, param); };
      break;
  }
  return infimum_over_parameter(make, q, diff_param_range(kind, param), tol);
}

/// Mean over i of the n = 1 average bound at (alpha_i, beta_i).
inline double samplewise_bound(const BoundingFamily& family,
                               const std::vector<std::pair<double, double>>& per_sample,
                               double tol = kDefaultInversionTol) {
  require(!per_sample.empty(), ErrorCode::domain, "samplewise_bound: no samples");
  double sum = 0.0;
  for (const auto& [a, b] : per_sample) sum += average_bound(family, a, b, 1, tol).rho;
  return sum / static_cast<double>(per_sample.size());
}

/// A fully specified bound: kind, family and its confidence plumbing.
struct BoundSpec {
  BoundKind kind = BoundKind::average_cramer;
  BoundingFamily family = BoundingFamily::bernoulli();
  std::optional<double> delta;
  std::optional<double> ln_upsilon;  // chernoff correction; computed when absent
  std::optional<double> u_value;     // two_e_ceil; defaults to n
  double tol = kDefaultInversionTol;

  std::string label() const { return std::string(to_string(kind)); }
};

/// Parses `kind` or `kind@family`, using `default_family` for the former.
inline BoundSpec parse_bound_spec(std::string_view text, const BoundingFamily& default_family) {
  BoundSpec spec;
  auto at = text.find('@');
  spec.kind = parse_bound_kind(text.substr(0, at));
  spec.family = at == std::string_view::npos ? default_family
                                             : BoundingFamily::parse(text.substr(at + 1));
  return spec;
}

inline void validate(const BoundSpec& s) {
  if (is_average_kind(s.kind) && s.delta)
    throw Error(ErrorCode::config, std::string(to_string(s.kind)) + " takes no delta");
  if (is_pac_kind(s.kind) && !s.delta)
    throw Error(ErrorCode::config, std::string(to_string(s.kind)) + " requires delta");
  auto need = [&](FamilyKind k, const char* what) {
    if (s.family.kind() != k)
      throw Error(ErrorCode::config, std::string(to_string(s.kind)) + " requires the " + what + " family");
  };
  switch (s.kind) {
    case BoundKind::mls:
    case BoundKind::catoni_inf: need(FamilyKind::bernoulli, "bernoulli"); break;
    case BoundKind::poisson_diff_inf: need(FamilyKind::poisson, "poisson"); break;
    case BoundKind::laplace_diff_inf: need(FamilyKind::laplace, "laplace"); break;
    case BoundKind::gaussian_diff_inf: need(FamilyKind::gaussian, "gaussian"); break;
    default: break;
  }
}

/// ln Upsilon of the Cramer comparator where a finite exact value exists.
inline double cramer_ln_upsilon(const BoundingFamily& family, std::int64_t n) {
  if (cramer_upsilon_divergent(family))
    throw Error(ErrorCode::correction_divergent, family.spec() + ": Upsilon is unbounded");
  if (family.kind() != FamilyKind::bernoulli)
    throw Error(ErrorCode::config, family.spec() + ": supply ln Upsilon for the chernoff correction");
  return upsilon_bernoulli_exact(Comparator::binary_kl(), n).ln_value;
}

/// Evaluates `spec` at (alpha, beta, n). For samplewise_average the
/// divergence is split evenly over the n samples.
inline BoundResult evaluate(const BoundSpec& spec, double alpha, double beta, std::int64_t n) {
  validate(spec);
  const auto& fam = spec.family;
  switch (spec.kind) {
    case BoundKind::average_cramer: return average_bound(fam, alpha, beta, n, spec.tol);
    case BoundKind::pac_cramer_chernoff: {
      if (cramer_upsilon_divergent(fam))
        throw Error(ErrorCode::correction_divergent, fam.spec() + ": Upsilon is unbounded");
      double lu = spec.ln_upsilon ? *spec.ln_upsilon : cramer_ln_upsilon(fam, n);
      return pac_bound(fam, alpha, beta, n, *spec.delta, LogCorrection::chernoff(lu), spec.tol);
    }
    case BoundKind::pac_cramer_xi:
      return pac_bound(fam, alpha, beta, n, *spec.delta, LogCorrection::xi(), spec.tol);
    case BoundKind::pac_cramer_two_e_ceil:
      return pac_bound(fam, alpha, beta, n, *spec.delta,
                       LogCorrection::two_e_ceil(spec.u_value ? *spec.u_value : static_cast<double>(n)),
                       spec.tol);
    case BoundKind::catoni_inf:
      return catoni_inf_bound(alpha, beta, n, spec.delta, {1e-3, 50.0, true, 64}, spec.tol);
    case BoundKind::mls: return mls_bound(alpha, beta, n, *spec.delta, spec.tol);
    case BoundKind::poisson_diff_inf:
      return diff_based_bound(DiffKind::poisson, 0.0, alpha, beta, n, spec.delta, spec.tol);
    case BoundKind::laplace_diff_inf:
      return diff_based_bound(DiffKind::laplace, fam.nuisance(), alpha, beta, n, spec.delta, spec.tol);
    case BoundKind::gaussian_diff_inf:
      return diff_based_bound(DiffKind::gaussian, fam.nuisance(), alpha, beta, n, spec.delta, spec.tol);
    case BoundKind::samplewise_average: {
      BoundResult r = average_bound(fam, alpha, beta / static_cast<double>(n), 1, spec.tol);
      return r;
    }
    case BoundKind::optimistic_reference:
      return optimistic_reference(fam, alpha, beta, n, spec.delta, spec.tol);
  }
  throw Error(ErrorCode::config, "unhandled bound kind");
}

/// rho, or NaN when the bound is infinite or its correction diverges.
inline double evaluate_or_nan(const BoundSpec& spec, double alpha, double beta, std::int64_t n) {
  try {
    return evaluate(spec, alpha, beta, n).rho;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::no_finite_bound || e.code() == ErrorCode::correction_divergent)
      return kNaN;
    throw;
  }
}

struct SurfaceGrid {
  double alpha_lo = 0.0, alpha_hi = 1.0;
  int alpha_steps = 50;
  double bn_lo = 1e-3, bn_hi = 10.0;  // beta / n
  int bn_steps = 50;
  bool bn_log = true;
  std::int64_t n = 100;

  std::vector<double> alphas() const {
    require(alpha_steps >= 2 && alpha_lo <= alpha_hi, ErrorCode::config, "bad alpha range");
    return linspace(alpha_lo, alpha_hi, static_cast<std::size_t>(alpha_steps));
  }
  std::vector<double> betas_over_n() const {
    require(bn_steps >= 2 && bn_lo <= bn_hi && bn_lo >= 0.0, ErrorCode::config,
            "bad beta/n range");
    if (bn_log) {
      require(bn_lo > 0.0, ErrorCode::config, "log-spaced beta/n needs a positive lower end");
      return logspace(bn_lo, bn_hi, static_cast<std::size_t>(bn_steps));
    }
    return linspace(bn_lo, bn_hi, static_cast<std::size_t>(bn_steps));
  }
};

/// Cells in row-major alpha-then-beta order.
struct Surface {
  std::vector<double> alphas;
  std::vector<double> betas_over_n;
  std::vector<double> a, b, diff;
  std::string label_a, label_b;

  std::size_t index(std::size_t i, std::size_t j) const { return i * betas_over_n.size() + j; }
};

/// Evaluates both bounds on the grid; diff = a - b, NaN where either is not
/// finite. With `clamp`, both columns are capped at that value first.
inline Surface comparison_surface(const BoundSpec& spec_a, const BoundSpec& spec_b,
                                  const SurfaceGrid& grid, std::optional<double> clamp = std::nullopt,
                                  unsigned threads = 1) {
  validate(spec_a);
  validate(spec_b);
  Surface s;
  s.alphas = grid.alphas();
  s.betas_over_n = grid.betas_over_n();
  s.label_a = spec_a.label();
  s.label_b = spec_b.label();
  const std::size_t cells = s.alphas.size() * s.betas_over_n.size();
  s.a.assign(cells, kNaN);
  s.b.assign(cells, kNaN);
  s.diff.assign(cells, kNaN);
  const double nd = static_cast<double>(grid.n);
  parallel_for(cells, threads, [&](std::size_t c) {
    double alpha = s.alphas[c / s.betas_over_n.size()];
    double beta = s.betas_over_n[c % s.betas_over_n.size()] * nd;
    double va = evaluate_or_nan(spec_a, alpha, beta, grid.n);
    double vb = evaluate_or_nan(spec_b, alpha, beta, grid.n);
    if (clamp) {
      if (!std::isnan(va)) va = std::min(va, *clamp);
      if (!std::isnan(vb)) vb = std::min(vb, *clamp);
    }
    s.a[c] = va;
    s.b[c] = vb;
    s.diff[c] = va - vb;
  });
  return s;
}

/// Integer n values log-spaced over [nmin, nmax], rounded and deduplicated.
inline std::vector<std::int64_t> log_spaced_counts(std::int64_t nmin, std::int64_t nmax, int points) {
  require(nmin >= 1 && nmax >= nmin && points >= 1, ErrorCode::config, "bad n range");
  std::vector<std::int64_t> out;
  if (points == 1 || nmin == nmax) {
    out.push_back(nmin);
    return out;
  }
  for (double v : logspace(static_cast<double>(nmin), static_cast<double>(nmax),
                           static_cast<std::size_t>(points))) {
    auto k = static_cast<std::int64_t>(std::llround(v));
    k = std::clamp(k, nmin, nmax);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

/// Bound value as a function of n at fixed alpha and beta.
inline std::vector<std::pair<std::int64_t, double>> n_dependence(
    const BoundSpec& spec, double alpha, double beta, const std::vector<std::int64_t>& counts,
    unsigned threads = 1) {
  validate(spec);
  std::vector<std::pair<std::int64_t, double>> out(counts.size());
  parallel_for(counts.size(), threads, [&](std::size_t i) {
    out[i] = {counts[i], evaluate_or_nan(spec, alpha, beta, counts[i])};
  });
  return out;
}

}  // namespace cgfbound
