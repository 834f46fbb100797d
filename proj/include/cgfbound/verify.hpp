#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "cgfbound/bounds.hpp"
#include "cgfbound/error.hpp"
#include "cgfbound/families.hpp"
#include "cgfbound/numeric.hpp"
#include "cgfbound/parallel.hpp"
#include "cgfbound/rng.hpp"

namespace cgfbound {

/// A finite hypothesis class whose per-sample losses are drawn from the
/// bounding family at each hypothesis's population loss.
struct SyntheticProblem {
  std::vector<double> hypothesis_means;
  std::vector<double> prior_weights;
  BoundingFamily family = BoundingFamily::bernoulli();
  double gibbs_temperature = 1.0;
  std::int64_t n = 10;
  std::int64_t trials = 2000;
  std::uint64_t seed = 0;
  // Optional replacement for the family sampler, e.g. a loss that is only
  // dominated by the family. Must draw from a law with the given mean.
  std::function<void(double, CounterRng&, std::span<double>)> loss_sampler;

  std::size_t size() const { return hypothesis_means.size(); }

  void validate() const {
    require(hypothesis_means.size() >= 2, ErrorCode::config, "problem: need at least two hypotheses");
    require(prior_weights.size() == hypothesis_means.size(), ErrorCode::config,
            "problem: one prior weight per hypothesis");
    double total = 0.0;
    for (double w : prior_weights) {
      require(w >= 0.0, ErrorCode::config, "problem: prior weights must be nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorCode::config, "problem: prior weights must sum to 1");
    Interval dom = family.mean_domain();
    for (double m : hypothesis_means)
      require(dom.contains_closure(m), ErrorCode::config, "problem: hypothesis mean outside the loss range");
    require(gibbs_temperature >= 0.0, ErrorCode::config, "problem: temperature must be nonnegative");
    require(n >= 1 && trials >= 1, ErrorCode::config, "problem: n and trials must be positive");
  }

  /// M hypotheses with means uniform on [mean_lo, mean_hi] and a uniform prior.
  static SyntheticProblem make(const BoundingFamily& family, std::size_t m, double mean_lo,
                               double mean_hi, double temperature, std::int64_t n,
                               std::int64_t trials, std::uint64_t seed) {
    SyntheticProblem p;
    p.family = family;
    p.gibbs_temperature = temperature;
    p.n = n;
    p.trials = trials;
    p.seed = seed;
    CounterRng rng(seed, ~std::uint64_t{0});
    for (std::size_t i = 0; i < m; ++i)
      p.hypothesis_means.push_back(mean_lo + (mean_hi - mean_lo) * rng.uniform());
    p.prior_weights.assign(m, 1.0 / static_cast<double>(m));
    p.validate();
    return p;
  }
};

struct TrialRecord {
  std::int64_t trial = 0;
  double train_loss = kNaN;
  double pop_loss = kNaN;
  double kl = kNaN;
  std::optional<std::vector<double>> per_sample_kls;
  double bound_value = kNaN;
  bool violated = false;
};

struct ViolationSummary {
  std::string kind;
  std::int64_t trials = 0;
  std::int64_t violations = 0;
  double rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  double delta = kNaN;
  bool reference_only = false;
  // Certified bounds pass when the upper interval end is at most delta.
  bool pass() const { return reference_only || ci_hi <= delta; }
};

/// Two-sided Clopper-Pearson interval at the given coverage.
inline std::pair<double, double> clopper_pearson(std::int64_t successes, std::int64_t trials,
                                                 double coverage = 0.95) {
  require(trials >= 1 && successes >= 0 && successes <= trials, ErrorCode::domain,
          "clopper_pearson: bad counts");
  using boost::math::binomial_distribution;
  double tail = 0.5 * (1.0 - coverage);
  auto nt = static_cast<double>(trials), ns = static_cast<double>(successes);
  double lo = successes == 0 ? 0.0 : binomial_distribution<>::find_lower_bound_on_p(nt, ns, tail);
  double hi = successes == trials ? 1.0 : binomial_distribution<>::find_upper_bound_on_p(nt, ns, tail);
  return {lo, hi};
}

/// KL(q || r) for probability vectors with 0 ln 0 = 0.
inline double kl_divergence(std::span<const double> q, std::span<const double> r) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += xlogxy(q[i], r[i]);
  return std::max(0.0, s);
}

namespace detail {

struct Posterior {
  std::vector<double> q;      // Q_n(h)
  std::vector<double> train;  // L_hat(h)
  double train_loss = 0.0;
  double pop_loss = 0.0;
  double kl = 0.0;
};

inline void draw_losses(const SyntheticProblem& p, CounterRng& rng, std::size_t count,
                        std::vector<double>& buffer, std::vector<double>& sums) {
  buffer.resize(count);
  for (std::size_t h = 0; h < p.size(); ++h) {
    if (p.loss_sampler) p.loss_sampler(p.hypothesis_means[h], rng, buffer);
    else p.family.sample_into(p.hypothesis_means[h], rng, buffer);
    for (double x : buffer) sums[h] += x;
  }
}

// Gibbs posterior Q_n(h) ~ Q_0(h) exp(-c n L_hat(h)) and its KL to `reference`.
inline Posterior gibbs(const SyntheticProblem& p, std::span<const double> loss_sums,
                       std::span<const double> reference) {
  const std::size_t m = p.size();
  const double nd = static_cast<double>(p.n);
  Posterior post;
  post.train.resize(m);
  std::vector<double> logw(m);
  for (std::size_t h = 0; h < m; ++h) {
    post.train[h] = loss_sums[h] / nd;
    logw[h] = std::log(p.prior_weights[h]) - p.gibbs_temperature * nd * post.train[h];
  }
  double z = log_sum_exp(logw);
  post.q.resize(m);
  for (std::size_t h = 0; h < m; ++h) {
    post.q[h] = std::exp(logw[h] - z);
    post.train_loss += post.q[h] * post.train[h];
    post.pop_loss += post.q[h] * p.hypothesis_means[h];
  }
  post.kl = kl_divergence(post.q, reference);
  return post;
}

}  // namespace detail

struct TrialRun {
  std::vector<TrialRecord> records;
  ViolationSummary summary;
};

/// Runs the trials once and evaluates every bound on the same draws. Trial
/// streams are keyed by (seed, trial), so the thread count does not change
/// any record.
inline std::vector<TrialRun> run_trials(const SyntheticProblem& problem,
                                        std::vector<BoundSpec> specs, unsigned threads = 1) {
  problem.validate();
  for (auto& s : specs) {
    validate(s);
    if (s.kind == BoundKind::pac_cramer_chernoff && !s.ln_upsilon)
      s.ln_upsilon = cramer_ln_upsilon(s.family, problem.n);
  }
  const auto trials = static_cast<std::size_t>(problem.trials);
  std::vector<TrialRun> runs(specs.size());
  for (auto& r : runs) r.records.resize(trials);

  parallel_for(trials, threads, [&](std::size_t t) {
    CounterRng rng(problem.seed, t);
    std::vector<double> buffer, sums(problem.size(), 0.0);
    detail::draw_losses(problem, rng, static_cast<std::size_t>(problem.n), buffer, sums);
    auto post = detail::gibbs(problem, sums, problem.prior_weights);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      TrialRecord rec;
      rec.trial = static_cast<std::int64_t>(t);
      rec.train_loss = post.train_loss;
      rec.pop_loss = post.pop_loss;
      rec.kl = post.kl;
      rec.bound_value = evaluate_or_nan(specs[k], post.train_loss, post.kl, problem.n);
      // An infinite bound cannot be violated.
      rec.violated = !std::isnan(rec.bound_value) && rec.pop_loss > rec.bound_value;
      runs[k].records[t] = std::move(rec);
    }
  });

  for (std::size_t k = 0; k < specs.size(); ++k) {
    auto& s = runs[k].summary;
    s.kind = specs[k].label();
    s.trials = problem.trials;
    s.violations = std::count_if(runs[k].records.begin(), runs[k].records.end(),
                                 [](const TrialRecord& r) { return r.violated; });
    s.rate = static_cast<double>(s.violations) / static_cast<double>(s.trials);
    std::tie(s.ci_lo, s.ci_hi) = clopper_pearson(s.violations, s.trials);
    s.delta = specs[k].delta.value_or(kNaN);
    s.reference_only = specs[k].kind == BoundKind::catoni_inf ||
                       specs[k].kind == BoundKind::optimistic_reference;
  }
  return runs;
}

inline TrialRun run_trials(const SyntheticProblem& problem, const BoundSpec& spec,
                           unsigned threads = 1) {
  return std::move(run_trials(problem, std::vector<BoundSpec>{spec}, threads).front());
}

/// PAC bound kinds with a finite correction for the family.
inline std::vector<BoundKind> certified_pac_kinds(const BoundingFamily& family) {
  std::vector<BoundKind> kinds{BoundKind::pac_cramer_xi, BoundKind::pac_cramer_two_e_ceil};
  if (family.kind() == FamilyKind::bernoulli) {
    kinds.push_back(BoundKind::mls);
    kinds.push_back(BoundKind::pac_cramer_chernoff);
  }
  return kinds;
}

struct SuiteCase {
  SyntheticProblem problem;
  std::vector<BoundSpec> specs;
  std::string label;
};

/// The standard seeded suite: Bernoulli, Gaussian (sigma^2 = 1) and Poisson
/// losses; M in {2, 10}; n in {10, 100}; c in {0, 1, 5}; three seeds.
inline std::vector<SuiteCase> default_suite(double delta = 0.05, std::int64_t trials = 2000,
                                            std::uint64_t base_seed = 7,
                                            bool include_reference = true) {
  struct FamilyRange {
    BoundingFamily family;
    double lo, hi;
  };
  const FamilyRange families[] = {{BoundingFamily::bernoulli(), 0.05, 0.95},
                                  {BoundingFamily::gaussian(1.0), 1.0, 3.0},
                                  {BoundingFamily::poisson(), 0.5, 5.0}};
  std::vector<SuiteCase> out;
  for (const auto& fr : families)
    for (std::size_t m : {2u, 10u})
      for (std::int64_t n : {10, 100})
        for (double c : {0.0, 1.0, 5.0})
          for (std::uint64_t s = 0; s < 3; ++s) {
            SuiteCase sc;
            std::uint64_t seed = base_seed + 1000 * s + 17 * m + static_cast<std::uint64_t>(n) +
                                 static_cast<std::uint64_t>(c * 3);
            sc.problem = SyntheticProblem::make(fr.family, m, fr.lo, fr.hi, c, n, trials, seed);
            for (BoundKind k : certified_pac_kinds(fr.family)) {
              BoundSpec b;
              b.kind = k;
              b.family = fr.family;
              b.delta = delta;
              sc.specs.push_back(b);
            }
            if (include_reference && fr.family.kind() == FamilyKind::bernoulli) {
              BoundSpec b;
              b.kind = BoundKind::catoni_inf;
              b.family = fr.family;
              b.delta = delta;
              sc.specs.push_back(b);
            }
            sc.label = fr.family.spec() + " M=" + std::to_string(m) + " n=" + std::to_string(n) +
                       " c=" + detail::format_double(c) + " seed=" + std::to_string(seed);
            out.push_back(std::move(sc));
          }
  return out;
}

struct AverageCheck {
  double mean_pop = kNaN;
  double mean_train = kNaN;
  double mean_kl = kNaN;
  double bound = kNaN;
  double slack = kNaN;  // bound - mean_pop
  double standard_error = kNaN;
  bool pass() const { return slack >= -2.0 * standard_error; }
};

/// Checks the average bound on trial means of the training loss, population
/// loss and KL. The standard error combines the population-loss error with
/// the propagated training-loss and KL errors.
inline AverageCheck average_bound_check(const SyntheticProblem& problem, unsigned threads = 1) {
  problem.validate();
  const auto trials = static_cast<std::size_t>(problem.trials);
  require(trials >= 2, ErrorCode::config, "average check: need at least two trials");
  std::vector<double> pop(trials), train(trials), kl(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    CounterRng rng(problem.seed, t);
    std::vector<double> buffer, sums(problem.size(), 0.0);
    detail::draw_losses(problem, rng, static_cast<std::size_t>(problem.n), buffer, sums);
    auto post = detail::gibbs(problem, sums, problem.prior_weights);
    pop[t] = post.pop_loss;
    train[t] = post.train_loss;
    kl[t] = post.kl;
  });
  auto mean_se = [&](const std::vector<double>& v) {
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return std::pair{m, sd / std::sqrt(static_cast<double>(v.size()))};
  };
  auto [mp, sp] = mean_se(pop);
  auto [mt, st] = mean_se(train);
  auto [mk, sk] = mean_se(kl);
  AverageCheck out;
  out.mean_pop = mp;
  out.mean_train = mt;
  out.mean_kl = mk;
  auto b = [&](double a, double k) { return average_bound(problem.family, a, k, problem.n).rho; };
  out.bound = b(mt, mk);
  out.slack = out.bound - mp;
  double ha = 1e-4 * std::max(1.0, std::abs(mt)), hk = 1e-4 * std::max(1.0, mk);
  Interval dom = problem.family.mean_domain();
  double a_hi = std::min(mt + ha, dom.hi), a_lo = std::max(mt - ha, dom.lo);
  double da = a_hi > a_lo ? (b(a_hi, mk) - b(a_lo, mk)) / (a_hi - a_lo) : 0.0;
  double dk = (b(mt, mk + hk) - out.bound) / hk;
  out.standard_error = std::sqrt(sp * sp + da * da * st * st + dk * dk * sk * sk);
  return out;
}

struct SamplewiseComparison {
  double samplewise = kNaN;
  double full = kNaN;
  double alpha = kNaN;
  double mi_full = kNaN;    // I(h; z)
  double mi_single = kNaN;  // I(h; z_i), equal for all i by exchangeability
  double se_samplewise = kNaN;
  double se_full = kNaN;
  bool inner_noise_dominates = false;

  double combined_se() const { return std::sqrt(se_samplewise * se_samplewise + se_full * se_full); }
  bool pass() const { return samplewise <= full + 2.0 * combined_se(); }
};

struct SamplewiseOptions {
  std::int64_t marginal_draws = 4000;
  std::int64_t outer_draws = 400;
  std::int64_t inner_draws = 1000;
  unsigned threads = 1;
};

/// Samplewise average bound against the full-sample average bound, both with
/// mutual-information divergences. The marginal of h is estimated from an
/// independent set of draws; I(h; z_1) uses nested draws of z_2..z_n.
inline SamplewiseComparison run_samplewise_comparison(const SyntheticProblem& problem,
                                                      const SamplewiseOptions& opt = {}) {
  problem.validate();
  require(opt.inner_draws >= 1000, ErrorCode::config, "samplewise: need at least 1000 inner draws");
  const std::size_t m = problem.size();
  const auto n = static_cast<std::size_t>(problem.n);
  const std::uint64_t marg_key = problem.seed ^ 0x6d617267ULL;
  const std::uint64_t outer_key = problem.seed ^ 0x6f757472ULL;

  // Marginal P(h) = E Q_n(h).
  const auto nm = static_cast<std::size_t>(opt.marginal_draws);
  std::vector<std::vector<double>> q_marg(nm);
  parallel_for(nm, opt.threads, [&](std::size_t t) {
    CounterRng rng(marg_key, t);
    std::vector<double> buffer, sums(m, 0.0);
    detail::draw_losses(problem, rng, n, buffer, sums);
    q_marg[t] = detail::gibbs(problem, sums, problem.prior_weights).q;
  });
  std::vector<double> marginal(m, 0.0);
  for (const auto& q : q_marg)
    for (std::size_t h = 0; h < m; ++h) marginal[h] += q[h] / static_cast<double>(nm);

  // Outer draws: full-sample KL to the marginal, and the conditional
  // posterior given z_1 averaged over inner draws of the rest.
  const auto no = static_cast<std::size_t>(opt.outer_draws);
  std::vector<double> kl_full(no), kl_single(no), train(no), inner_var(no, 0.0);
  parallel_for(no, opt.threads, [&](std::size_t t) {
    CounterRng rng(outer_key, t);
    std::vector<double> buffer, first(m, 0.0);
    detail::draw_losses(problem, rng, 1, buffer, first);
    std::vector<double> sums = first;
    detail::draw_losses(problem, rng, n - 1, buffer, sums);
    auto post = detail::gibbs(problem, sums, marginal);
    kl_full[t] = post.kl;
    train[t] = post.train_loss;
    if (n == 1) {
      kl_single[t] = post.kl;
      return;
    }
    std::vector<double> cond(m, 0.0), cond_sq(m, 0.0);
    CounterRng inner(outer_key ^ 0x696e6e72ULL, t);
    const auto ni = static_cast<std::size_t>(opt.inner_draws);
    for (std::size_t i = 0; i < ni; ++i) {
      std::vector<double> s = first;
      detail::draw_losses(problem, inner, n - 1, buffer, s);
      auto q = detail::gibbs(problem, s, marginal).q;
      for (std::size_t h = 0; h < m; ++h) {
        cond[h] += q[h];
        cond_sq[h] += q[h] * q[h];
      }
    }
    double var = 0.0;
    for (std::size_t h = 0; h < m; ++h) {
      cond[h] /= static_cast<double>(ni);
      double v = cond_sq[h] / static_cast<double>(ni) - cond[h] * cond[h];
      // First-order bias of KL from noise in cond: sum var(h) / (2 n_i P(h)).
      if (marginal[h] > 0.0) var += std::max(0.0, v) / (2.0 * static_cast<double>(ni) * marginal[h]);
    }
    inner_var[t] = var;
    kl_single[t] = kl_divergence(cond, marginal);
  });

  auto mean_se = [](const std::vector<double>& v) {
    double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    double se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                                   std::sqrt(static_cast<double>(v.size()))
                             : 0.0;
    return std::pair{mu, se};
  };
  SamplewiseComparison out;
  auto [alpha, se_alpha] = mean_se(train);
  auto [mi_n, se_n] = mean_se(kl_full);
  out.alpha = alpha;
  out.mi_full = mi_n;
  if (n == 1) {
    out.mi_single = mi_n;
    out.samplewise = out.full = average_bound(problem.family, alpha, mi_n, 1).rho;
    out.se_samplewise = out.se_full = 0.0;
    return out;
  }
  auto [mi_1, se_1] = mean_se(kl_single);
  double bias = std::accumulate(inner_var.begin(), inner_var.end(), 0.0) / static_cast<double>(no);
  out.mi_single = mi_1;
  out.inner_noise_dominates = bias > se_1;
  const auto& fam = problem.family;
  const auto nn = problem.n;
  out.full = average_bound(fam, alpha, mi_n, nn).rho;
  out.samplewise = average_bound(fam, alpha, mi_1, 1).rho;

  // Standard errors by finite-difference propagation.
  auto deriv = [&](auto&& f, double x, double h) { return (f(x + h) - f(std::max(0.0, x - h))) / (x + h - std::max(0.0, x - h)); };
  double hk = 1e-4 * std::max(1e-3, mi_n);
  double dfk = deriv([&](double k) { return average_bound(fam, alpha, k, nn).rho; }, mi_n, hk);
  double dsk = deriv([&](double k) { return average_bound(fam, alpha, k, 1).rho; }, mi_1,
                     1e-4 * std::max(1e-3, mi_1));
  double ha = 1e-4 * std::max(1e-3, std::abs(alpha));
  Interval dom = fam.mean_domain();
  double a_lo = std::max(alpha - ha, dom.lo), a_hi = std::min(alpha + ha, dom.hi);
  double dfa = (average_bound(fam, a_hi, mi_n, nn).rho - average_bound(fam, a_lo, mi_n, nn).rho) / (a_hi - a_lo);
  double dsa = (average_bound(fam, a_hi, mi_1, 1).rho - average_bound(fam, a_lo, mi_1, 1).rho) / (a_hi - a_lo);
  out.se_full = std::hypot(dfk * se_n, dfa * se_alpha);
  out.se_samplewise = std::hypot(dsk * std::hypot(se_1, bias), dsa * se_alpha);
  return out;
}

}  // namespace cgfbound
