#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cgfbound/bounds.hpp"
#include "cgfbound/inversion.hpp"
#include "cgfbound/upsilon.hpp"
#include "cgfbound/verify.hpp"

namespace cgfbound {

/// %.9g; non-finite values print as nan / inf / -inf.
inline std::string format_g9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_surface_csv(std::ostream& out, const Surface& s) {
  out << "alpha,beta_over_n," << s.label_a << ',' << s.label_b << ",diff\n";
  for (std::size_t i = 0; i < s.alphas.size(); ++i)
    for (std::size_t j = 0; j < s.betas_over_n.size(); ++j) {
      std::size_t c = s.index(i, j);
      out << format_g9(s.alphas[i]) << ',' << format_g9(s.betas_over_n[j]) << ','
          << format_g9(s.a[c]) << ',' << format_g9(s.b[c]) << ',' << format_g9(s.diff[c]) << '\n';
    }
}

inline void write_ndep_csv(std::ostream& out,
                           const std::vector<std::pair<std::int64_t, double>>& rows) {
  out << "n,bound\n";
  for (const auto& [n, v] : rows) out << n << ',' << format_g9(v) << '\n';
}

namespace detail {
// JSON has no inf or nan; those become null.
inline nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const UpsilonEstimate& e) {
  nlohmann::json j;
  j["mode"] = to_string(e.mode);
  j["ln_upsilon"] = e.mode == UpsilonMode::divergent ? nlohmann::json("inf") : detail::num(e.ln_value);
  j["r_star"] = detail::num(e.r_star);
  j["ci"] = e.ci ? nlohmann::json::array({detail::num(e.ci->first), detail::num(e.ci->second)})
                 : nlohmann::json(nullptr);
  j["tail_error"] = e.tail_error ? detail::num(*e.tail_error) : nlohmann::json(nullptr);
  j["r_at_cap"] = e.r_at_cap;
  j["divergent_suspect"] = e.divergent_suspect;
  return j;
}

inline nlohmann::json to_json(const BoundResult& r) {
  nlohmann::json j;
  j["rho"] = detail::num(r.rho);
  j["budget"] = detail::num(r.budget);
  j["bracket"] = nlohmann::json::array({detail::num(r.bracket_lo), detail::num(r.bracket_hi)});
  j["iterations"] = r.iterations;
  j["status"] = to_string(r.status);
  j["reference_only"] = r.reference_only;
  if (r.parameter) j["parameter"] = *r.parameter;
  return j;
}

inline nlohmann::json to_json(const TrialRecord& t, const std::string& kind) {
  nlohmann::json j;
  j["type"] = "trial";
  j["kind"] = kind;
  j["trial"] = t.trial;
  j["train_loss"] = detail::num(t.train_loss);
  j["pop_loss"] = detail::num(t.pop_loss);
  j["kl"] = detail::num(t.kl);
  j["per_sample_kls"] = t.per_sample_kls ? nlohmann::json(*t.per_sample_kls) : nlohmann::json(nullptr);
  j["bound_value"] = detail::num(t.bound_value);
  j["violated"] = t.violated;
  return j;
}

inline nlohmann::json to_json(const ViolationSummary& s) {
  nlohmann::json j;
  j["type"] = "summary";
  j["kind"] = s.kind;
  j["trials"] = s.trials;
  j["violations"] = s.violations;
  j["rate"] = s.rate;
  j["ci"] = nlohmann::json::array({s.ci_lo, s.ci_hi});
  j["delta"] = detail::num(s.delta);
  j["reference_only"] = s.reference_only;
  j["pass"] = s.pass();
  return j;
}

}  // namespace cgfbound
