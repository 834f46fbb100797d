// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "cgfbound/cgfbound.hpp"
#include "cli_commands.hpp"

using namespace cgfbound;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double max_seconds, const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = max_seconds <= 0 || secs < max_seconds;
  bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s criterion %d: %s | %s | %.2fs%s\n", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs,
              in_time ? "" : " (over time limit)");
  std::fflush(stdout);
}

std::string g(double v) { return format_g9(v); }

BoundSpec spec_of(std::string_view text, const BoundingFamily& fam) { return parse_bound_spec(text, fam); }

// +inf when the inversion has no finite value.
double rho_or_inf(const Comparator& c, const BoundQuery& q) {
  try {
    return invert(c, q).rho;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::no_finite_bound) return kInf;
    throw;
  }
}

struct CatalogEntry {
  BoundingFamily family;
  std::vector<double> alphas;
  std::vector<Comparator> comparators;
};

std::vector<CatalogEntry> catalog() {
  auto closed = [](const BoundingFamily& f) {
    Interval r = f.mean_domain();
    r.lo_closed = std::isfinite(r.lo);
    r.hi_closed = std::isfinite(r.hi);
    return r;
  };
  std::vector<CatalogEntry> out;
  auto bern = BoundingFamily::bernoulli();
  out.push_back({bern,
                 {0.0, 0.05, 0.3, 0.6, 0.9},
                 {Comparator::binary_kl(), Comparator::catoni(-0.5), Comparator::catoni(-2), Comparator::catoni(-8),
                  Comparator::scaled_diff(1, closed(bern)), Comparator::scaled_diff(4, closed(bern))}});
  auto pois = BoundingFamily::poisson();
  out.push_back({pois,
                 {0.0, 0.5, 1.0, 3.0},
                 {Comparator::poisson_diff(0.3), Comparator::poisson_diff(1), Comparator::poisson_diff(3),
                  Comparator::parametric(pois, -1), Comparator::scaled_diff(1, closed(pois))}});
  auto gau = BoundingFamily::gaussian(1);
  out.push_back({gau,
                 {-1.0, 0.0, 2.0},
                 {Comparator::gaussian_diff(0.5, 1), Comparator::gaussian_diff(2, 1), Comparator::parametric(gau, -1),
                  Comparator::gaussian_diff(1, 0.25)}});
  auto lap = BoundingFamily::laplace(1);
  out.push_back({lap, {-1.0, 0.0, 2.0}, {Comparator::laplace_diff(0.3, 1), Comparator::laplace_diff(0.9, 1)}});
  for (const auto& f : {BoundingFamily::gamma(5), BoundingFamily::inverse_gaussian(1),
                        BoundingFamily::negative_binomial(3)})
    out.push_back({f,
                   {0.5, 1.0, 3.0},
                   {Comparator::parametric(f, -0.5), Comparator::parametric(f, -2), Comparator::scaled_diff(0.5, closed(f))}});
  return out;
}

}  // namespace

int main() {
  criterion(1, "closed-form Cramer = numeric conjugate, 7 families, 20x20", 5, [] {
    double worst = 0;
    bool ok = true;
    for (const auto& f : all_family_kinds_default()) {
      auto line = cli::conjugate_grid_check(f, 20);
      worst = std::max(worst, line.worst);
      ok = ok && line.pass();
    }
    return Outcome{ok, "worst=" + g(worst) + " tol=1e-07"};
  });

  criterion(2, "Catoni infimum = binary-kl bound, 30x30, n=100", 30, [] {
    auto line = cli::catoni_kl_check(30, 100);
    return Outcome{line.pass(), "worst=" + g(line.worst) + " tol=1e-06"};
  });

  criterion(3, "Laplace difference infimum = Cramer bound, 30x30, b=1", 30, [] {
    auto line = cli::laplace_identity_check(30, 100, 1.0);
    return Outcome{line.pass(), "worst=" + g(line.worst) + " tol=1e-06"};
  });

  criterion(4, "ln Upsilon_kl(n) <= ln(2 sqrt n) for n <= 500, Upsilon_kl(1) = 2", 120, [] {
    auto kl = Comparator::binary_kl();
    double one = std::exp(upsilon_bernoulli_exact(kl, 1).ln_value);
    double min_gap = kInf;
    std::int64_t worst_n = 0;
    for (std::int64_t n = 1; n <= 500; ++n) {
      double gap = std::log(2 * std::sqrt(static_cast<double>(n))) - upsilon_bernoulli_exact(kl, n).ln_value;
      if (gap < min_gap) min_gap = gap, worst_n = n;
    }
    bool ok = std::abs(one - 2.0) <= 1e-12 && min_gap >= -1e-12;
    return Outcome{ok, "Upsilon(1)=" + g(one) + " min gap=" + g(min_gap) + " at n=" + std::to_string(worst_n)};
  });

  criterion(5, "sub-Gaussian minus kl surface (clamped at 1), 50x50, n=100", 0, [] {
    SurfaceGrid grid;  // alpha 0..1 x 50, beta/n 1e-3..10 log x 50, n = 100
    auto bern = BoundingFamily::bernoulli();
    auto s = comparison_surface(spec_of("gaussian_diff_inf@gaussian:sigma2=0.25", bern),
                                spec_of("average_cramer", bern), grid, 1.0);
    double min_diff = kInf, clamp_worst = 0;
    std::size_t nan = 0, clamp_cells = 0;
    for (std::size_t c = 0; c < s.diff.size(); ++c) {
      if (std::isnan(s.diff[c])) {
        ++nan;
        continue;
      }
      min_diff = std::min(min_diff, s.diff[c]);
      if (s.a[c] >= 1.0 && s.b[c] >= 1.0 - 1e-6) {
        ++clamp_cells;
        clamp_worst = std::max(clamp_worst, std::abs(s.diff[c]));
      }
    }
    bool ok = nan == 0 && min_diff >= 0.0 && clamp_cells > 0 && clamp_worst <= 1e-6;
    return Outcome{ok, "min diff=" + g(min_diff) + " clamp cells=" + std::to_string(clamp_cells) +
                           " clamp |diff| max=" + g(clamp_worst) + " nan=" + std::to_string(nan)};
  });

  criterion(6, "Poisson difference minus Poisson Cramer surface >= -1e-9, 50x50", 0, [] {
    SurfaceGrid grid;
    grid.alpha_hi = 5.0;
    auto pois = BoundingFamily::poisson();
    auto s = comparison_surface(spec_of("poisson_diff_inf", pois), spec_of("average_cramer", pois), grid);
    double min_diff = kInf, max_diff = -kInf;
    std::size_t nan = 0;
    for (double d : s.diff) {
      if (std::isnan(d)) {
        ++nan;
        continue;
      }
      min_diff = std::min(min_diff, d);
      max_diff = std::max(max_diff, d);
    }
    bool ok = nan == 0 && min_diff >= -1e-9;
    return Outcome{ok, "min diff=" + g(min_diff) + " max diff=" + g(max_diff) + " nan=" + std::to_string(nan)};
  });

  criterion(7, "gamma k=5 n-dependence: 89% and 13% decreases (+-2 pts)", 10, [] {
    auto spec = spec_of("average_cramer", BoundingFamily::gamma(5));
    auto v = n_dependence(spec, 1.0, 1000.0, {100, 1000, 10000, 100000});
    double d1 = 100 * (1 - v[1].second / v[0].second);
    double d2 = 100 * (1 - v[3].second / v[2].second);
    bool ok = std::abs(d1 - 89) <= 2 && std::abs(d2 - 13) <= 2;
    return Outcome{ok, "1e2->1e3: " + g(d1) + "% 1e4->1e5: " + g(d2) + "%"};
  });

  criterion(8, "divergence detection and unit Upsilon for Poisson differences", 0, [] {
    auto pois = BoundingFamily::poisson();
    auto gam = BoundingFamily::gamma(5);
    bool pd = upsilon_poisson_series(Comparator::cramer_of(pois), 10).mode == UpsilonMode::divergent;
    bool gd = upsilon_quadrature(Comparator::cramer_of(gam), gam, 10).mode == UpsilonMode::divergent;
    double worst = 0;
    for (double t : {0.1, 0.5, 1.0, 2.0, 4.0})
      for (std::int64_t n : {1, 5, 20}) {
        auto e = upsilon_poisson_series(Comparator::poisson_diff(t), n, 1e-10);
        worst = std::max(worst, e.mode == UpsilonMode::truncated ? std::abs(e.ln_value) : kInf);
      }
    bool ok = pd && gd && worst <= 1e-9;
    return Outcome{ok, std::string("poisson cramer divergent=") + (pd ? "yes" : "no") +
                           " gamma cramer divergent=" + (gd ? "yes" : "no") + " max |ln Upsilon| poisson_diff=" +
                           g(worst)};
  });

  criterion(9, "Cramer bound with iota=1 <= every catalog comparator bound", 0, [] {
    const std::int64_t n = 20;
    const double delta = 0.05;
    double min_slack = kInf;
    std::size_t cells = 0, skipped = 0;
    std::string worst_at;
    for (const auto& entry : catalog()) {
      auto cram = Comparator::cramer_of(entry.family);
      UpsilonOptions uo;
      uo.r_grid_points = 401;
      for (const auto& comp : entry.comparators) {
        auto up = upsilon_auto(comp, entry.family, n, uo);
        // A maximizer on the grid cap means the supremum was not reached.
        if (!up.finite() || up.r_at_cap) {
          ++skipped;
          continue;
        }
        for (double a : entry.alphas)
          for (double bn : logspace(1e-3, 1.0, 6)) {
            double beta = bn * static_cast<double>(n);
            double ref = rho_or_inf(cram, BoundQuery{a, beta, n, delta, LogCorrection::one()});
            double other = rho_or_inf(comp, BoundQuery{a, beta, n, delta, LogCorrection::chernoff(up.ln_value)});
            double slack = other == kInf ? kInf : (ref == kInf ? -kInf : other - ref);
            ++cells;
            if (slack < min_slack) {
              min_slack = slack;
              worst_at = comp.name() + " alpha=" + g(a) + " beta/n=" + g(bn);
            }
          }
      }
    }
    bool ok = min_slack >= -1e-9 && cells > 0;
    return Outcome{ok, "cells=" + std::to_string(cells) + " min slack=" + g(min_slack) + " (" + worst_at +
                           ") comparators skipped (unbounded Upsilon)=" + std::to_string(skipped)};
  });

  criterion(10, "default verify suite: upper CP bound <= delta for certified PAC kinds", 120, [] {
    std::size_t checked = 0, failed = 0;
    double worst = 0;
    std::string worst_at;
    for (const auto& sc : default_suite()) {
      auto runs = run_trials(sc.problem, sc.specs, default_threads());
      for (const auto& r : runs) {
        if (r.summary.reference_only) continue;
        ++checked;
        if (!r.summary.pass()) ++failed;
        if (r.summary.ci_hi > worst) worst = r.summary.ci_hi, worst_at = sc.label + " " + r.summary.kind;
      }
    }
    return Outcome{failed == 0, "summaries=" + std::to_string(checked) + " failed=" + std::to_string(failed) +
                                    " worst upper=" + g(worst) + " (" + worst_at + ")"};
  });

  criterion(11, "samplewise <= full bound within 2 combined SE, 20 problems", 0, [] {
    int passed = 0;
    double worst = -kInf;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto p = SyntheticProblem::make(BoundingFamily::bernoulli(), 5, 0.1, 0.9, 2.0, 10, 1, seed);
      SamplewiseOptions o;
      o.threads = default_threads();
      auto r = run_samplewise_comparison(p, o);
      passed += r.pass();
      worst = std::max(worst, (r.samplewise - r.full) / std::max(r.combined_se(), 1e-300));
    }
    return Outcome{passed == 20, std::to_string(passed) + "/20 pass, max (samplewise-full)/SE=" + g(worst)};
  });

  criterion(12, "Poisson closed form (W_-1 branch) = bisection, 100 pairs", 0, [] {
    auto line = cli::lambert_check(100, 11);
    return Outcome{line.pass(), "worst=" + g(line.worst) + " tol=1e-09"};
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
