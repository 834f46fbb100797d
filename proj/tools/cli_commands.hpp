#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgfbound/cgfbound.hpp"

namespace cgfbound::cli {

enum Exit : int { kOk = 0, kUsage = 2, kNoBound = 3, kIo = 4, kCheckFailed = 5 };

struct CheckLine {
  std::string name;
  double worst = 0.0;
  double tol = 0.0;
  bool pass() const { return worst <= tol; }
};

/// Worst |closed-form Cramer - numeric conjugate| on a points x points grid.
inline CheckLine conjugate_grid_check(const BoundingFamily& family, int points = 20) {
  double lo = 0.1, hi = 5.0;
  if (family.kind() == FamilyKind::bernoulli) lo = 0.025, hi = 0.975;
  if (family.kind() == FamilyKind::gaussian || family.kind() == FamilyKind::laplace) lo = -3.0, hi = 3.0;
  auto grid = linspace(lo, hi, static_cast<std::size_t>(points));
  CheckLine line{"conjugate " + family.spec(), 0.0, 1e-7};
  for (double p : grid)
    for (double q : grid) {
      double num = numeric_conjugate(CgfHandle::of(family, p), q).value;
      double err = std::abs(num - family.cramer(q, p));
      line.worst = std::max(line.worst, std::isnan(err) ? kInf : err);
    }
  return line;
}

/// Worst gap between the Catoni infimum and the binary-kl bound.
inline CheckLine catoni_kl_check(int points = 30, std::int64_t n = 100) {
  CheckLine line{"catoni inf = kl", 0.0, 1e-6};
  for (double a : linspace(0.01, 0.99, static_cast<std::size_t>(points)))
    for (double bn : logspace(1e-3, 2.0, static_cast<std::size_t>(points))) {
      double beta = bn * static_cast<double>(n);
      double x = catoni_inf_bound(a, beta, n).rho;
      double y = invert(Comparator::binary_kl(), BoundQuery{a, beta, n, std::nullopt, LogCorrection::one()}).rho;
      line.worst = std::max(line.worst, std::abs(x - y));
    }
  return line;
}

/// Worst gap between the Laplace difference infimum and the Cramer bound.
inline CheckLine laplace_identity_check(int points = 30, std::int64_t n = 100, double b = 1.0) {
  CheckLine line{"laplace diff inf = cramer", 0.0, 1e-6};
  auto fam = BoundingFamily::laplace(b);
  for (double a : linspace(-3.0, 3.0, static_cast<std::size_t>(points)))
    for (double bn : logspace(1e-3, 10.0, static_cast<std::size_t>(points))) {
      double beta = bn * static_cast<double>(n);
      double x = diff_based_bound(DiffKind::laplace, b, a, beta, n).rho;
      double y = average_bound(fam, a, beta, n).rho;
      line.worst = std::max(line.worst, std::abs(x - y));
    }
  return line;
}

/// Worst gap between the W_{-1} closed form and bisection for Poisson.
inline CheckLine lambert_check(int pairs = 100, std::uint64_t seed = 11) {
  CheckLine line{"poisson closed form = bisection", 0.0, 1e-9};
  CounterRng rng(seed, 0x6c616d62);
  auto comp = Comparator::cramer_of(BoundingFamily::poisson());
  for (int i = 0; i < pairs; ++i) {
    double alpha = std::exp(std::log(1e-2) + (std::log(1e2) - std::log(1e-2)) * rng.uniform());
    double budget = std::exp(std::log(1e-4) + (std::log(10.0) - std::log(1e-4)) * rng.uniform());
    double closed = invert_closed_form_poisson(alpha, budget);
    double bis = invert_budget(comp, alpha, budget, 1e-14).rho;
    line.worst = std::max(line.worst, std::abs(closed - bis));
  }
  return line;
}

namespace detail {

struct Common {
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::string out_path;
  std::string config_path;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed");
  sub->add_option("--threads", c.threads, "worker threads (0: all cores)");
  sub->add_option("--out", c.out_path, "output path (default: stdout)");
  sub->add_option("--config", c.config_path, "key=value file; explicit flags win");
}

// Expands `--config <file>` into `--key value` pairs placed ahead of the
// explicit flags; with take-last option policy the explicit flags win.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config '" + path + "'");
  std::vector<std::string> expanded{args.front()};
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::config, "config line without '=': " + line);
    auto trim = [](std::string v) {
      auto b = v.find_first_not_of(" \t\r");
      auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
    };
    expanded.push_back("--" + trim(line.substr(0, eq)));
    expanded.push_back(trim(line.substr(eq + 1)));
  }
  expanded.insert(expanded.end(), args.begin() + 1, args.end());
  return expanded;
}

inline unsigned threads_of(const Common& c) { return c.threads == 0 ? default_threads() : c.threads; }

// Runs `write` against the --out file, or `fallback` when no path is set.
inline void with_output(const Common& c, std::ostream& fallback,
                        const std::function<void(std::ostream&)>& write) {
  if (c.out_path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(c.out_path, std::ios::binary);
  if (!file) throw Error(ErrorCode::io, "cannot open '" + c.out_path + "' for writing");
  write(file);
  file.flush();
  if (!file) throw Error(ErrorCode::io, "write to '" + c.out_path + "' failed");
}

inline LogCorrection parse_correction(const std::string& text) {
  if (text == "one") return LogCorrection::one();
  if (text == "xi") return LogCorrection::xi();
  if (text == "mls") return LogCorrection::mls_sqrt();
  if (text == "2eceil") return LogCorrection::two_e_ceil(kNaN);
  if (text.rfind("2eceil=", 0) == 0)
    return LogCorrection::two_e_ceil(cgfbound::detail::parse_double(text.substr(7), "u"));
  if (text.rfind("chernoff=", 0) == 0)
    return LogCorrection::chernoff(cgfbound::detail::parse_double(text.substr(9), "ln upsilon"));
  if (text.rfind("iota=", 0) == 0)
    return LogCorrection::explicit_value(cgfbound::detail::parse_double(text.substr(5), "iota"));
  throw Error(ErrorCode::config, "unknown correction '" + text + "'");
}

inline void print_check(std::ostream& out, const CheckLine& c) {
  out << (c.pass() ? "PASS " : "FAIL ") << c.name << " worst=" << format_g9(c.worst)
      << " tol=" << format_g9(c.tol) << '\n';
}

}  // namespace detail

/// Parses and runs one command; returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalization bounds from convex comparators under CGF constraints", "cgfbound"};
  app.require_subcommand(1, 1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  detail::Common common;

  // bound
  auto* bound = app.add_subcommand("bound", "invert a single bound");
  std::string family_spec, comparator_spec = "cramer", correction = "one", kind_spec;
  double alpha = 0.0, beta = 0.0;
  std::int64_t n = 1;
  std::optional<double> delta;
  bool as_json = false;
  bound->add_option("--family", family_spec, "bounding family")->required();
  bound->add_option("--alpha", alpha, "training loss")->required();
  bound->add_option("--beta", beta, "divergence (nats)")->required();
  bound->add_option("--n", n, "sample count")->required();
  bound->add_option("--delta", delta, "confidence; omit for the average bound");
  bound->add_option("--correction", correction, "one|xi|mls|2eceil[=u]|chernoff=<ln upsilon>|iota=<v>");
  bound->add_option("--comparator", comparator_spec, "comparator spec");
  bound->add_option("--kind", kind_spec, "named bound kind; overrides --comparator/--correction");
  bound->add_flag("--json", as_json, "print the result as JSON");
  detail::add_common(bound, common);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "difference surface of two bounds over (alpha, beta/n)");
  std::vector<std::string> kinds;
  SurfaceGrid grid;
  std::string bn_scale = "log";
  std::optional<double> clamp;
  sweep->add_option("--family", family_spec, "default family for the kinds")->required();
  sweep->add_option("--kinds", kinds, "two bound kinds, each 'kind' or 'kind@family'")
      ->required()->expected(2)->delimiter(',');
  sweep->add_option("--alpha-lo", grid.alpha_lo);
  sweep->add_option("--alpha-hi", grid.alpha_hi);
  sweep->add_option("--alpha-steps", grid.alpha_steps);
  sweep->add_option("--bn-lo", grid.bn_lo, "lowest beta/n");
  sweep->add_option("--bn-hi", grid.bn_hi, "highest beta/n");
  sweep->add_option("--bn-steps", grid.bn_steps);
  sweep->add_option("--bn-scale", bn_scale)->check(CLI::IsMember({"linear", "log"}));
  sweep->add_option("--n", grid.n, "sample count");
  sweep->add_option("--delta", delta, "confidence for PAC kinds");
  sweep->add_option("--clamp", clamp, "cap both bounds at this value");
  detail::add_common(sweep, common);

  // ndep
  auto* ndep = app.add_subcommand("ndep", "bound as a function of n at fixed alpha, beta");
  std::int64_t nmin = 10, nmax = 100000;
  int points = 50;
  std::string ndep_kind = "average_cramer";
  ndep->add_option("--family", family_spec)->required();
  ndep->add_option("--alpha", alpha)->required();
  ndep->add_option("--beta", beta)->required();
  ndep->add_option("--nmin", nmin);
  ndep->add_option("--nmax", nmax);
  ndep->add_option("--points", points);
  ndep->add_option("--kind", ndep_kind);
  ndep->add_option("--delta", delta);
  detail::add_common(ndep, common);

  // upsilon
  auto* ups = app.add_subcommand("upsilon", "ln Upsilon of a comparator over a family");
  std::string method = "auto";
  UpsilonOptions uopt;
  ups->add_option("--comparator", comparator_spec)->required();
  ups->add_option("--family", family_spec)->required();
  ups->add_option("--n", n)->required();
  ups->add_option("--method", method)->check(CLI::IsMember({"auto", "exact", "affine", "series", "quadrature", "mc"}));
  ups->add_option("--samples", uopt.monte_carlo.samples, "Monte-Carlo draws per grid point");
  ups->add_option("--grid-points", uopt.r_grid_points, "r-grid resolution");
  ups->add_option("--r-cap", uopt.r_cap, "grid cap for unbounded mean ranges");
  ups->add_option("--eps", uopt.eps, "series / quadrature tail tolerance");
  detail::add_common(ups, common);

  // verify
  auto* ver = app.add_subcommand("verify", "Monte-Carlo validity check with Gibbs posteriors");
  std::string bound_kind = "mls";
  std::int64_t trials = 2000;
  std::size_t hypotheses = 10;
  double temperature = 1.0;
  std::optional<double> mean_lo, mean_hi;
  bool suite = false, no_records = false;
  ver->add_option("--family", family_spec, "loss family");
  ver->add_option("--bound", bound_kind, "bound kind");
  ver->add_option("--delta", delta, "confidence");
  ver->add_option("--trials", trials);
  ver->add_option("--m", hypotheses, "number of hypotheses");
  ver->add_option("--n", n, "sample count");
  ver->add_option("--temperature", temperature, "Gibbs temperature c");
  ver->add_option("--mean-lo", mean_lo);
  ver->add_option("--mean-hi", mean_hi);
  ver->add_flag("--suite", suite, "run the standard seeded suite");
  ver->add_flag("--summary-only", no_records, "omit per-trial records");
  detail::add_common(ver, common);

  // conjugate-check
  auto* conj = app.add_subcommand("conjugate-check", "closed-form Cramer vs numeric conjugate");
  std::vector<std::string> families;
  int conj_points = 20;
  conj->add_option("--family", families, "families (default: all seven)");
  conj->add_option("--points", conj_points, "grid points per axis");
  detail::add_common(conj, common);

  // selfcheck
  auto* self = app.add_subcommand("selfcheck", "identity suites at stated tolerances");
  detail::add_common(self, common);

  try {
    args = detail::expand_config(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::io ? kIo : kUsage;
  }
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::FileError& e) {
    err << e.what() << '\n';
    return kIo;
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (bound->parsed()) {
      auto family = BoundingFamily::parse(family_spec);
      BoundResult r;
      if (!kind_spec.empty()) {
        BoundSpec spec = parse_bound_spec(kind_spec, family);
        spec.delta = delta;
        if (correction.rfind("chernoff=", 0) == 0) spec.ln_upsilon = detail::parse_correction(correction).value;
        if (correction.rfind("2eceil=", 0) == 0) spec.u_value = detail::parse_correction(correction).value;
        r = evaluate(spec, alpha, beta, n);
      } else {
        LogCorrection iota = detail::parse_correction(correction);
        if (iota.kind == LogCorrection::Kind::two_e_ceil && std::isnan(iota.value))
          iota.value = static_cast<double>(n);
        if (comparator_spec == "cramer" && delta) {
          r = pac_bound(family, alpha, beta, n, *delta, iota);
        } else {
          Comparator comp = parse_comparator(comparator_spec, family);
          r = invert(comp, BoundQuery{alpha, beta, n, delta, iota});
        }
      }
      detail::with_output(common, out, [&](std::ostream& o) {
        if (as_json) {
          o << to_json(r).dump() << '\n';
          return;
        }
        o << "rho=" << format_g9(r.rho) << " budget=" << format_g9(r.budget)
          << " status=" << to_string(r.status);
        if (r.reference_only) o << " reference_only=1";
        o << '\n';
      });
      return kOk;
    }

    if (sweep->parsed()) {
      auto family = BoundingFamily::parse(family_spec);
      grid.bn_log = bn_scale == "log";
      BoundSpec a = parse_bound_spec(kinds.at(0), family), b = parse_bound_spec(kinds.at(1), family);
      for (BoundSpec* s : {&a, &b})
        if (!is_average_kind(s->kind)) s->delta = delta;
      Surface s = comparison_surface(a, b, grid, clamp, detail::threads_of(common));
      s.label_a = kinds.at(0);
      s.label_b = kinds.at(1);
      detail::with_output(common, out, [&](std::ostream& o) { write_surface_csv(o, s); });
      return kOk;
    }

    if (ndep->parsed()) {
      BoundSpec spec = parse_bound_spec(ndep_kind, BoundingFamily::parse(family_spec));
      spec.delta = delta;
      auto rows = n_dependence(spec, alpha, beta, log_spaced_counts(nmin, nmax, points),
                               detail::threads_of(common));
      detail::with_output(common, out, [&](std::ostream& o) { write_ndep_csv(o, rows); });
      return kOk;
    }

    if (ups->parsed()) {
      auto family = BoundingFamily::parse(family_spec);
      Comparator comp = parse_comparator(comparator_spec, family);
      uopt.monte_carlo.seed = common.seed;
      uopt.monte_carlo.threads = detail::threads_of(common);
      UpsilonEstimate e;
      auto grid_r = default_r_grid(family, uopt.r_grid_points, uopt.r_cap);
      if (method == "auto") e = upsilon_auto(comp, family, n, uopt);
      else if (method == "exact") {
        if (family.kind() != FamilyKind::bernoulli)
          throw Error(ErrorCode::config, "exact needs the bernoulli family");
        e = upsilon_bernoulli_exact(comp, n, uopt.r_grid_points);
      } else if (method == "affine") e = upsilon_affine(comp, family, n, grid_r);
      else if (method == "series") {
        SeriesOptions so;
        so.eps = uopt.eps;
        so.r_grid_points = uopt.r_grid_points;
        so.r_cap = uopt.r_cap;
        e = upsilon_series(comp, family, n, so);
      } else if (method == "quadrature") {
        QuadratureOptions qo;
        qo.eps = uopt.eps;
        qo.r_grid_points = uopt.r_grid_points;
        qo.r_cap = uopt.r_cap;
        e = upsilon_quadrature(comp, family, n, qo);
      } else {
        e = upsilon_monte_carlo(comp, family, n, grid_r, uopt.monte_carlo);
      }
      detail::with_output(common, out, [&](std::ostream& o) { o << to_json(e).dump() << '\n'; });
      return kOk;
    }

    if (ver->parsed()) {
      std::vector<SuiteCase> cases;
      if (suite) {
        cases = default_suite(delta.value_or(0.05), trials, common.seed);
      } else {
        require(!family_spec.empty(), ErrorCode::config, "verify needs --family or --suite");
        auto family = BoundingFamily::parse(family_spec);
        Interval dom = family.mean_domain();
        double lo = mean_lo.value_or(std::isfinite(dom.lo) ? dom.lo + 0.05 * (dom.hi - dom.lo) : 0.5);
        double hi = mean_hi.value_or(std::isfinite(dom.hi) ? dom.hi - 0.05 * (dom.hi - dom.lo) : 5.0);
        SuiteCase sc;
        sc.problem = SyntheticProblem::make(family, hypotheses, lo, hi, temperature, n == 1 ? 50 : n,
                                            trials, common.seed);
        BoundSpec spec = parse_bound_spec(bound_kind, family);
        if (!is_average_kind(spec.kind)) spec.delta = delta.value_or(0.05);
        sc.specs.push_back(spec);
        sc.label = family.spec();
        cases.push_back(std::move(sc));
      }
      bool all_pass = true;
      std::ostringstream text;
      detail::with_output(common, out, [&](std::ostream& o) {
        for (const auto& sc : cases) {
          auto runs = run_trials(sc.problem, sc.specs, detail::threads_of(common));
          for (const auto& run : runs) {
            if (!no_records)
              for (const auto& rec : run.records) o << to_json(rec, run.summary.kind).dump() << '\n';
            auto j = to_json(run.summary);
            j["problem"] = sc.label;
            o << j.dump() << '\n';
            all_pass = all_pass && run.summary.pass();
            text << (run.summary.pass() ? "PASS " : "FAIL ") << sc.label << ' ' << run.summary.kind
                 << " violations=" << run.summary.violations << '/' << run.summary.trials
                 << " ci_hi=" << format_g9(run.summary.ci_hi)
                 << (run.summary.reference_only ? " reference_only" : "") << '\n';
          }
        }
      });
      if (!common.out_path.empty()) out << text.str();
      out << (all_pass ? "verify: PASS\n" : "verify: FAIL\n");
      return all_pass ? kOk : kCheckFailed;
    }

    if (conj->parsed()) {
      std::vector<BoundingFamily> fams;
      if (families.empty()) fams = all_family_kinds_default();
      for (const auto& f : families) fams.push_back(BoundingFamily::parse(f));
      bool ok = true;
      detail::with_output(common, out, [&](std::ostream& o) {
        for (const auto& f : fams) {
          auto line = conjugate_grid_check(f, conj_points);
          detail::print_check(o, line);
          ok = ok && line.pass();
        }
      });
      return ok ? kOk : kCheckFailed;
    }

    if (self->parsed()) {
      std::vector<CheckLine> lines;
      for (const auto& f : all_family_kinds_default()) lines.push_back(conjugate_grid_check(f));
      lines.push_back(catoni_kl_check());
      lines.push_back(laplace_identity_check());
      lines.push_back(lambert_check());
      bool ok = std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.pass(); });
      detail::with_output(common, out, [&](std::ostream& o) {
        for (const auto& l : lines) detail::print_check(o, l);
        o << (ok ? "selfcheck: PASS\n" : "selfcheck: FAIL\n");
      });
      return ok ? kOk : kCheckFailed;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::no_finite_bound:
      case ErrorCode::correction_divergent: return kNoBound;
      case ErrorCode::io: return kIo;
      default: return kUsage;
    }
  }
  return kUsage;
}

}  // namespace cgfbound::cli
