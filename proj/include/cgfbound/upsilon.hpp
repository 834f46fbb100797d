#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cgfbound/comparator.hpp"
#include "cgfbound/corrections.hpp"
#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/parallel.hpp"
#include "cgfbound/rng.hpp"

namespace cgfbound {

enum class UpsilonMode { exact, truncated, monte_carlo, divergent };

inline const char* to_string(UpsilonMode m) {
  switch (m) {
    case UpsilonMode::exact: return "exact";
    case UpsilonMode::truncated: return "truncated";
    case UpsilonMode::monte_carlo: return "monte_carlo";
    case UpsilonMode::divergent: return "divergent";
  }
  return "?";
}

/// ln Upsilon_Delta(n) = ln sup_r E exp(n Delta(mean(x), r)), x ~ P_r^n.
struct UpsilonEstimate {
  UpsilonMode mode = UpsilonMode::exact;
  double ln_value = kNaN;
  std::optional<double> tail_error;
  std::optional<std::pair<double, double>> ci;  // log domain, monte_carlo only
  double r_star = kNaN;
  bool r_at_cap = false;           // maximizer sits on the end of a capped grid
  bool divergent_suspect = false;  // heavy-tailed Monte-Carlo weights

  bool finite() const { return mode != UpsilonMode::divergent && std::isfinite(ln_value); }
};

inline constexpr int kDefaultRGridPoints = 2001;
inline constexpr double kDefaultUnboundedRCap = 50.0;

/// Grid over the family's mean range, kept 1e-6 away from finite endpoints
/// and capped at +-cap where the range is unbounded.
inline std::vector<double> default_r_grid(const BoundingFamily& family,
                                          int points = kDefaultRGridPoints,
                                          double cap = kDefaultUnboundedRCap) {
  Interval dom = family.mean_domain();
  double lo = std::isfinite(dom.lo) ? dom.lo + 1e-6 : -cap;
  double hi = std::isfinite(dom.hi) ? dom.hi - 1e-6 : cap;
  return linspace(lo, hi, static_cast<std::size_t>(std::max(points, 2)));
}

namespace detail {

// Evaluates f over the grid, then refines the best point by golden section
// within its neighbours. f returns ln E exp(n Delta) at r (or +inf).
template <typename F>
std::pair<double, double> maximize_over_grid(const std::vector<double>& grid, F&& f,
                                             bool refine = true) {
  std::size_t best = 0;
  double best_value = -kInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = f(grid[i]);
    if (v == kInf) return {grid[i], kInf};
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  double r_star = grid[best];
  if (refine && grid.size() >= 3) {
    std::size_t a = best == 0 ? 0 : best - 1;
    std::size_t b = std::min(grid.size() - 1, best + 1);
    Extremum e = golden_maximize([&](double r) { return f(r); }, grid[a], grid[b],
                                 1e-9 * std::max(1.0, std::abs(grid[b] - grid[a])), 80);
    if (e.value > best_value) {
      best_value = e.value;
      r_star = e.arg;
    }
  }
  return {r_star, best_value};
}

inline bool at_cap(const BoundingFamily& family, const std::vector<double>& grid, double r_star) {
  Interval dom = family.mean_domain();
  double step = grid.size() > 1 ? std::abs(grid[1] - grid[0]) : 0.0;
  return (!std::isfinite(dom.hi) && r_star >= grid.back() - step) ||
         (!std::isfinite(dom.lo) && r_star <= grid.front() + step);
}

}  // namespace detail

/// Exact binomial sum for the Bernoulli family, evaluated in log domain.
inline UpsilonEstimate upsilon_bernoulli_exact(const Comparator& comp, std::int64_t n,
                                               int r_grid_points = kDefaultRGridPoints) {
  require(n >= 1, ErrorCode::domain, "upsilon: n must be positive");
  const auto nn = static_cast<std::size_t>(n);
  const double nd = static_cast<double>(n);
  std::vector<double> lchoose(nn + 1), delta_q(nn + 1);
  for (std::size_t k = 0; k <= nn; ++k) {
    double kd = static_cast<double>(k);
    lchoose[k] = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
    delta_q[k] = kd / nd;
  }
  auto ln_sum = [&](double r) {
    LogSumExp acc;
    double lr = std::log(r), l1r = std::log1p(-r);
    for (std::size_t k = 0; k <= nn; ++k) {
      double kd = static_cast<double>(k);
      double lp = lchoose[k] + (k == 0 ? 0.0 : kd * lr) + (k == nn ? 0.0 : (nd - kd) * l1r);
      if (lp == -kInf) continue;
      double d = comp(delta_q[k], r);
      if (!std::isfinite(d))
        throw Error(ErrorCode::domain, comp.name() + ": comparator not finite on [0,1]^2");
      acc.add(lp + nd * d);
    }
    return acc.value();
  };
  auto grid = linspace(0.0, 1.0, static_cast<std::size_t>(std::max(r_grid_points, 3)));
  auto [r_star, value] = detail::maximize_over_grid(grid, ln_sum);
  UpsilonEstimate est;
  est.mode = UpsilonMode::exact;
  est.ln_value = value;
  est.r_star = r_star;
  return est;
}

struct SeriesOptions {
  double eps = 1e-10;
  int r_grid_points = kDefaultRGridPoints;
  double r_cap = kDefaultUnboundedRCap;
  std::int64_t max_terms = 1'000'000;
  std::int64_t divergence_window = 10'000;
};

/// Series for discrete families with an additive sample sum (Poisson and
/// negative binomial): sums P(n xbar = k) exp(n Delta(k/n, r)) over k.
inline UpsilonEstimate upsilon_series(const Comparator& comp, const BoundingFamily& family,
                                      std::int64_t n, const SeriesOptions& opt = {}) {
  require(n >= 1, ErrorCode::domain, "upsilon: n must be positive");
  require(family.kind() == FamilyKind::poisson || family.kind() == FamilyKind::negative_binomial,
          ErrorCode::domain, "upsilon_series: family must be Poisson or negative binomial");
  const double nd = static_cast<double>(n);
  const bool negbin = family.kind() == FamilyKind::negative_binomial;

  double worst_tail = 0.0;
  bool diverged = false;
  bool undecided = false;

  auto ln_sum = [&](double r) -> double {
    const double mean = nd * r;
    // Sum of n NB(R, ps) draws is NB(n R, ps); ps = R / (R + r).
    const double big_r = nd * family.nuisance();
    const double l_ps = negbin ? std::log(family.nuisance() / (family.nuisance() + r)) : 0.0;
    const double l_qs = negbin ? std::log(r / (family.nuisance() + r)) : 0.0;
    const double lgr = negbin ? std::lgamma(big_r) : 0.0;
    const double lmean = std::log(mean);
    auto log_pmf = [&](double k) {
      if (negbin) return std::lgamma(k + big_r) - lgr - std::lgamma(k + 1.0) + big_r * l_ps + k * l_qs;
      return k * lmean - mean - std::lgamma(k + 1.0);
    };
    auto log_term = [&](std::int64_t k) {
      double kd = static_cast<double>(k);
      double d = comp(kd / nd, r);
      if (std::isnan(d)) throw Error(ErrorCode::domain, comp.name() + ": comparator is NaN");
      return log_pmf(kd) + nd * d;
    };

    LogSumExp acc;
    double prev = log_term(0);
    acc.add(prev);
    std::int64_t slow_run = 0;
    for (std::int64_t k = 1; k < opt.max_terms; ++k) {
      double cur = log_term(k);
      if (cur == kInf) return kInf;
      acc.add(cur);
      double kd = static_cast<double>(k);
      if (kd > mean + 1.0) {
        double log_ratio = cur - prev;
        if (log_ratio < 0.0) {
          // Geometric tail bound from the current ratio.
          double ratio = std::exp(log_ratio);
          double log_tail = cur + log_ratio - std::log1p(-ratio);
          double total = acc.value();
          if (log_tail < std::log(opt.eps) + total) {
            worst_tail = std::max(worst_tail, std::exp(log_tail - total));
            return total;
          }
        }
        // Ratios above 1 - 1/k dominate the harmonic series.
        if (log_ratio >= std::log1p(-1.0 / kd)) {
          if (++slow_run >= opt.divergence_window) {
            diverged = true;
            return kInf;
          }
        } else {
          slow_run = 0;
        }
      }
      prev = cur;
    }
    undecided = true;
    return acc.value();
  };

  auto grid = default_r_grid(family, opt.r_grid_points, opt.r_cap);
  auto [r_star, value] = detail::maximize_over_grid(grid, ln_sum);
  UpsilonEstimate est;
  est.r_star = r_star;
  if (diverged || value == kInf) {
    est.mode = UpsilonMode::divergent;
    est.ln_value = kInf;
    return est;
  }
  est.mode = UpsilonMode::truncated;
  est.ln_value = value;
  est.tail_error = undecided ? kInf : worst_tail;
  est.r_at_cap = detail::at_cap(family, grid, r_star);
  return est;
}

inline UpsilonEstimate upsilon_poisson_series(const Comparator& comp, std::int64_t n,
                                              double eps = 1e-10, SeriesOptions opt = {}) {
  opt.eps = eps;
  return upsilon_series(comp, BoundingFamily::poisson(), n, opt);
}

/// Exact route for comparators affine in q: E exp(n (a q + c)) under P_r^n
/// equals exp(n (c + Psi_r(a))).
inline UpsilonEstimate upsilon_affine(const Comparator& comp, const BoundingFamily& family,
                                      std::int64_t n, const std::vector<double>& r_grid) {
  require(comp.affine().has_value(), ErrorCode::domain,
          comp.name() + ": comparator is not affine in q");
  require(n >= 1 && !r_grid.empty(), ErrorCode::domain, "upsilon_affine: bad arguments");
  const auto& aff = *comp.affine();
  const double nd = static_cast<double>(n);
  auto ln_r = [&](double r) {
    double psi = family.cgf(r, aff.slope(r));
    if (psi == kInf) return kInf;
    return nd * (aff.intercept(r) + psi);
  };
  auto [r_star, value] = detail::maximize_over_grid(r_grid, ln_r);
  UpsilonEstimate est;
  est.r_star = r_star;
  if (value == kInf) {
    est.mode = UpsilonMode::divergent;
    est.ln_value = kInf;
    return est;
  }
  est.mode = UpsilonMode::exact;
  est.ln_value = value;
  est.r_at_cap = detail::at_cap(family, r_grid, r_star);
  return est;
}

struct QuadratureOptions {
  double eps = 1e-10;
  int r_grid_points = 201;
  double r_cap = kDefaultUnboundedRCap;
};

/// Quadrature over the exact law of the sample mean for the Gaussian, gamma
/// and inverse-Gaussian families. The integration window doubles until the
/// newly added shell is negligible; a window that never closes is divergence.
inline UpsilonEstimate upsilon_quadrature(const Comparator& comp, const BoundingFamily& family,
                                          std::int64_t n, const QuadratureOptions& opt = {}) {
  require(n >= 1, ErrorCode::domain, "upsilon: n must be positive");
  const FamilyKind kind = family.kind();
  require(kind == FamilyKind::gaussian || kind == FamilyKind::gamma ||
              kind == FamilyKind::inverse_gaussian,
          ErrorCode::domain, "upsilon_quadrature: family must be Gaussian, gamma or inverse Gaussian");
  const double nd = static_cast<double>(n);
  const double v = family.nuisance();
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;

  double worst_tail = 0.0;

  auto ln_int = [&](double r) -> double {
    // Integration variable u; x(u) and the log density of u.
    double h, l_start, l_max;
    std::function<double(double)> x_of, log_dens;
    if (kind == FamilyKind::gaussian) {
      double sd = std::sqrt(v / nd);
      x_of = [r, sd](double u) { return r + sd * u; };
      log_dens = [](double u) { return -0.5 * u * u - kLogSqrt2Pi; };
      h = 0.01;
      l_start = 8.0;
      l_max = 1024.0;
    } else if (kind == FamilyKind::gamma) {
      double a = nd * v;  // xbar / r ~ Gamma(a, 1/a)
      double c = a * std::log(a) - std::lgamma(a);
      x_of = [r](double u) { return r * std::exp(u); };
      log_dens = [a, c](double u) { return c + a * u - a * std::exp(u); };
      h = std::min(0.01, 0.05 / std::sqrt(a));
      l_start = 8.0 / std::sqrt(a) + 1.0;
      l_max = 256.0;
    } else {
      double lam = nd * v;  // xbar ~ IG(r, n lambda)
      x_of = [r](double u) { return r * std::exp(u); };
      log_dens = [r, lam](double u) {
        double x = r * std::exp(u);
        return 0.5 * std::log(lam / (2.0 * std::numbers::pi * x * x * x)) -
               lam * (x - r) * (x - r) / (2.0 * r * r * x) + std::log(x);
      };
      h = std::min(0.01, 0.05 * std::sqrt(r / lam));
      l_start = 8.0 * std::sqrt(r / lam) + 1.0;
      l_max = 256.0;
    }
    auto log_g = [&](double u) {
      double d = comp(x_of(u), r);
      if (std::isnan(d)) throw Error(ErrorCode::domain, comp.name() + ": comparator is NaN");
      double ld = log_dens(u);
      if (ld == -kInf) return -kInf;
      return ld + nd * d;
    };
    const double lh = std::log(h);

    LogSumExp total;
    double covered = 0.0;
    for (double L = l_start;; L *= 2.0) {
      LogSumExp shell;
      // Points in [-L, -covered) and (covered, L], at multiples of h.
      auto first = static_cast<std::int64_t>(std::ceil(covered / h));
      if (covered == 0.0) shell.add(log_g(0.0) + lh), first = 1;
      else if (static_cast<double>(first) * h == covered) ++first;
      auto last = static_cast<std::int64_t>(std::floor(L / h));
      for (std::int64_t i = first; i <= last; ++i) {
        double u = static_cast<double>(i) * h;
        double a = log_g(u), b = log_g(-u);
        if (a == kInf || b == kInf) return kInf;
        shell.add(a + lh);
        shell.add(b + lh);
      }
      double before = total.value();
      total.add(shell.value());
      covered = static_cast<double>(last) * h;
      if (before != -kInf && shell.value() < std::log(opt.eps) + total.value()) {
        worst_tail = std::max(worst_tail, std::exp(shell.value() - total.value()));
        return total.value();
      }
      if (L >= l_max) return kInf;
    }
  };

  auto grid = default_r_grid(family, opt.r_grid_points, opt.r_cap);
  auto [r_star, value] = detail::maximize_over_grid(grid, ln_int);
  UpsilonEstimate est;
  est.r_star = r_star;
  if (value == kInf) {
    est.mode = UpsilonMode::divergent;
    est.ln_value = kInf;
    return est;
  }
  est.mode = UpsilonMode::truncated;
  est.ln_value = value;
  est.tail_error = worst_tail;
  est.r_at_cap = detail::at_cap(family, grid, r_star);
  return est;
}

struct MonteCarloOptions {
  std::int64_t samples = 10'000;
  std::uint64_t seed = 0;
  int bootstrap = 500;
  unsigned threads = 1;
};

namespace detail {

struct McCell {
  double ln_mean = kNaN;
  double ci_lo = kNaN;
  double ci_hi = kNaN;
  bool suspect = false;
};

inline double ln_mean_exp(std::span<const double> w) {
  return log_sum_exp(w) - std::log(static_cast<double>(w.size()));
}

}  // namespace detail

/// Monte-Carlo estimate: for each grid r, log-mean-exp of n Delta(xbar, r)
/// over `samples` draws of n-tuples, with a percentile-bootstrap 95% CI.
inline UpsilonEstimate upsilon_monte_carlo(const Comparator& comp, const BoundingFamily& family,
                                           std::int64_t n, const std::vector<double>& r_grid,
                                           const MonteCarloOptions& opt = {}) {
  require(n >= 1 && opt.samples >= 4 && !r_grid.empty(), ErrorCode::domain,
          "upsilon_monte_carlo: bad arguments");
  const auto N = static_cast<std::size_t>(opt.samples);
  const auto nn = static_cast<std::size_t>(n);
  const double nd = static_cast<double>(n);
  std::vector<detail::McCell> cells(r_grid.size());

  // Log-weights n Delta(xbar, r) for grid cell j; stream (seed, 2j).
  auto weights = [&](std::size_t j) {
    const double r = r_grid[j];
    CounterRng rng(opt.seed, 2 * j);
    std::vector<double> draw(nn), w(N);
    for (std::size_t i = 0; i < N; ++i) {
      family.sample_into(r, rng, draw);
      double xbar = 0.0;
      for (double x : draw) xbar += x;
      xbar /= nd;
      double d = comp(xbar, r);
      w[i] = std::isnan(d) ? kInf : nd * d;
    }
    return w;
  };

  parallel_for(r_grid.size(), opt.threads, [&](std::size_t j) {
    std::vector<double> w = weights(j);
    detail::McCell cell;
    cell.ln_mean = detail::ln_mean_exp(w);
    if (!std::isfinite(cell.ln_mean)) {
      cells[j] = cell;
      return;
    }
    // Heavy-tail diagnostics: share of the top 1% of weights and growth of
    // the estimate over nested prefixes.
    double q1 = detail::ln_mean_exp(std::span(w).first(N / 4));
    double q2 = detail::ln_mean_exp(std::span(w).first(N / 2));
    std::size_t top = std::max<std::size_t>(1, N / 100);
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(top), w.end(), std::greater<>());
    double share = std::exp(log_sum_exp(std::span(w).first(top)) - log_sum_exp(w));
    cell.suspect = share > 0.5 && q1 < q2 && q2 < cell.ln_mean;
    cells[j] = cell;
  });

  std::size_t best = 0;
  for (std::size_t j = 1; j < cells.size(); ++j)
    if (cells[j].ln_mean > cells[best].ln_mean) best = j;

  // Percentile bootstrap on the reported cell only; its draws are replayed
  // from the same stream. Weights are taken relative to the largest one so a
  // resample is a plain sum.
  if (std::isfinite(cells[best].ln_mean)) {
    std::vector<double> w = weights(best);
    const double wmax = *std::max_element(w.begin(), w.end());
    std::vector<double> scaled(N);
    for (std::size_t i = 0; i < N; ++i) scaled[i] = std::exp(w[i] - wmax);
    CounterRng boot(opt.seed, 2 * best + 1);
    std::vector<double> stats(static_cast<std::size_t>(std::max(opt.bootstrap, 1)));
    for (double& st : stats) {
      double sum = 0.0;
      for (std::size_t i = 0; i < N; ++i) sum += scaled[boot() % N];
      st = wmax + std::log(sum / static_cast<double>(N));
    }
    std::sort(stats.begin(), stats.end());
    auto pick = [&](double q) {
      auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(stats.size() - 1) + 0.5));
      return stats[idx];
    };
    cells[best].ci_lo = std::min(pick(0.025), cells[best].ln_mean);
    cells[best].ci_hi = std::max(pick(0.975), cells[best].ln_mean);
  }

  UpsilonEstimate est;
  est.r_star = r_grid[best];
  if (cells[best].ln_mean == kInf) {
    est.mode = UpsilonMode::divergent;
    est.ln_value = kInf;
    return est;
  }
  est.mode = UpsilonMode::monte_carlo;
  est.ln_value = cells[best].ln_mean;
  est.ci = std::pair{cells[best].ci_lo, cells[best].ci_hi};
  for (const auto& c : cells) est.divergent_suspect = est.divergent_suspect || c.suspect;
  est.r_at_cap = detail::at_cap(family, r_grid, est.r_star);
  return est;
}

struct UpsilonOptions {
  int r_grid_points = kDefaultRGridPoints;
  double r_cap = kDefaultUnboundedRCap;
  double eps = 1e-10;
  MonteCarloOptions monte_carlo;
};

/// Picks the most exact available route: the CGF identity for comparators
/// affine in q, the binomial sum for Bernoulli, series for Poisson and
/// negative binomial, quadrature for Gaussian, gamma and inverse Gaussian,
/// and Monte Carlo otherwise.
inline UpsilonEstimate upsilon_auto(const Comparator& comp, const BoundingFamily& family,
                                    std::int64_t n, const UpsilonOptions& opt = {}) {
  if (comp.affine())
    return upsilon_affine(comp, family, n, default_r_grid(family, opt.r_grid_points, opt.r_cap));
  switch (family.kind()) {
    case FamilyKind::bernoulli: return upsilon_bernoulli_exact(comp, n, opt.r_grid_points);
    case FamilyKind::poisson:
    case FamilyKind::negative_binomial: {
      SeriesOptions s;
      s.eps = opt.eps;
      s.r_grid_points = opt.r_grid_points;
      s.r_cap = opt.r_cap;
      return upsilon_series(comp, family, n, s);
    }
    case FamilyKind::gaussian:
    case FamilyKind::gamma:
    case FamilyKind::inverse_gaussian: {
      QuadratureOptions q;
      q.eps = opt.eps;
      q.r_grid_points = std::min(opt.r_grid_points, 201);
      q.r_cap = opt.r_cap;
      return upsilon_quadrature(comp, family, n, q);
    }
    case FamilyKind::laplace:
      return upsilon_monte_carlo(comp, family, n, default_r_grid(family, 21, opt.r_cap),
                                 opt.monte_carlo);
  }
  return {};
}

}  // namespace cgfbound
