#pragma once

#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpoly.hpp"

namespace hcs {

inline int pid() { return var_id("p"); }
inline int pbid() { return var_id("pb"); }

// {F,G} = F_p dG - dF G_p + F_pb dbG - dbF G_pb; d, db act on coefficients only.
inline MPoly poisson(const MPoly& F, const MPoly& G) {
  int p = pid(), pb = pbid();
  return F.diff(p) * G.d() - F.d() * G.diff(p) + F.diff(pb) * G.db() - F.db() * G.diff(pb);
}

// Symbols base2..basen as polynomials; entry k holds base_k, entries below lo are zero.
inline std::vector<MPoly> symbol_list(const std::string& base, int n, int lo = 2) {
  std::vector<MPoly> r(static_cast<size_t>(n + 1));
  for (int k = lo; k <= n; ++k) r[static_cast<size_t>(k)] = MPoly::var(base + std::to_string(k));
  return r;
}

// Q(p) = sum_k mu_k p^(k-1) from mu[1..n].
inline MPoly beltrami_poly(const std::vector<MPoly>& mu) {
  MPoly q;
  for (size_t k = 1; k < mu.size(); ++k) q += mu[k] * MPoly::var(pid(), static_cast<int>(k) - 1);
  return q;
}

// P(p) = sum_k t_k p^(n-k) from t[1..n].
inline MPoly spectral_poly(const std::vector<MPoly>& t, int n) {
  MPoly q;
  for (int k = 1; k < static_cast<int>(t.size()) && k <= n; ++k) q += t[static_cast<size_t>(k)] * MPoly::var(pid(), n - k);
  return q;
}

using Truncation = std::function<MPoly(const MPoly&)>;

// Normal form modulo <p^n - P(p), -pb + Q>. Q may itself contain pb; the
// substitution is then iterated to a fixed point.
inline MPoly reduce_by(const MPoly& F, int n, const MPoly& P, const MPoly& Q, const Truncation& trunc = {}) {
  int p = pid(), pb = pbid();
  auto pc = P.as_univariate(p);
  if (static_cast<int>(pc.size()) > n) throw std::invalid_argument("reduce_by: P must have p-degree < n");
  auto lower = [&](const MPoly& g) {
    auto c = g.as_univariate(p);
    for (int k = static_cast<int>(c.size()) - 1; k >= n; --k) {
      MPoly lead = c[static_cast<size_t>(k)];
      if (lead.is_zero()) continue;
      for (size_t j = 0; j < pc.size(); ++j) c[static_cast<size_t>(k - n) + j] += lead * pc[j];
    }
    if (static_cast<int>(c.size()) > n) c.resize(static_cast<size_t>(n));
    MPoly r = MPoly::from_univariate(c, p);
    return trunc ? trunc(r) : r;
  };
  MPoly r = lower(trunc ? trunc(F) : F);
  int guard = n * (F.total_degree() + Q.total_degree() + 2) + n;
  for (int depth = 0; r.contains_var(pb); ++depth) {
    if (depth > guard) throw std::logic_error("reduce_by: substitution did not terminate");
    r = lower(r.subs(pb, Q));
  }
  return r;
}

// Entry point with mu[1..n] (mu[1] may be zero), optional t[1..n].
inline MPoly reduce_mod_I(const MPoly& F, int n, const std::vector<MPoly>& mu,
                          const std::optional<std::vector<MPoly>>& t = std::nullopt, const Truncation& trunc = {}) {
  MPoly P = t ? spectral_poly(*t, n) : MPoly();
  return reduce_by(F, n, P, beltrami_poly(mu), trunc);
}

// Variation of mu_1..mu_n under the Hamiltonian H on the zero fiber:
// result[l] is the coefficient of p^(l-1) in {H, -pb + Q} mod I.
inline std::vector<MPoly> vary_mu(int n, const std::vector<MPoly>& mu, const MPoly& H) {
  MPoly Q = beltrami_poly(mu);
  MPoly r = reduce_by(poisson(H, -MPoly::var(pbid()) + Q), n, MPoly(), Q);
  std::vector<MPoly> out(static_cast<size_t>(n + 1));
  for (int l = 1; l <= n; ++l) out[static_cast<size_t>(l)] = r.coeff(pid(), l - 1);
  return out;
}

// Entry k (k = 2..n) of the generalized holomorphicity condition on t.
inline std::vector<MPoly> condition_C_residual(int n, const std::vector<MPoly>& mu, const std::vector<MPoly>& t) {
  auto m = [&](int k) { return k < static_cast<int>(mu.size()) ? mu[static_cast<size_t>(k)] : MPoly(); };
  auto tk = [&](int k) { return k < static_cast<int>(t.size()) ? t[static_cast<size_t>(k)] : MPoly(); };
  std::vector<MPoly> out(static_cast<size_t>(n + 1));
  for (int k = 2; k <= n; ++k) {
    MPoly r = -tk(k).db() + m(2) * tk(k).d() + MPoly(GaussRat(k)) * m(2).d() * tk(k);
    for (int l = 1; l <= n - k; ++l)
      r += MPoly(GaussRat(l + k)) * m(l + 2).d() * tk(k + l) + MPoly(GaussRat(l + 1)) * m(l + 2) * tk(k + l).d();
    out[static_cast<size_t>(k)] = r;
  }
  return out;
}

// mu_1 = -sum_{k=2}^{n-1} (k/n) t_k mu_{k+1}, the reduced (barycentric) value.
inline MPoly reduced_mu1_symbolic(int n, const std::vector<MPoly>& mu, const std::vector<MPoly>& t) {
  MPoly r;
  for (int k = 2; k <= n - 1; ++k) r -= MPoly(GaussRat::frac(k, n)) * t[static_cast<size_t>(k)] * mu[static_cast<size_t>(k + 1)];
  return r;
}

// {-p^n + P, -pb + Q} mod I mod t^2 with t_1 = 0. mu[1] is overwritten by the
// reduced value plus the optional perturbation.
inline MPoly spectral_bracket(int n, std::vector<MPoly> mu, const std::vector<MPoly>& t,
                              const MPoly& mu1_perturbation = MPoly()) {
  std::vector<MPoly> tt = t;
  tt.resize(static_cast<size_t>(n + 1));
  tt[1] = MPoly();
  mu.resize(static_cast<size_t>(n + 1));
  mu[1] = reduced_mu1_symbolic(n, mu, tt) + mu1_perturbation;
  std::set<std::string> bases;
  for (int k = 2; k <= n; ++k)
    for (int v : tt[static_cast<size_t>(k)].variables()) bases.insert(Registry::get().info(v).base);
  auto marked = marks_bases(bases);
  Truncation trunc = [marked](const MPoly& f) { return truncate_nilpotent(f, marked); };
  MPoly P = spectral_poly(tt, n);
  MPoly Q = beltrami_poly(mu);
  MPoly F = -MPoly::var(pid(), n) + P, G = -MPoly::var(pbid()) + Q;
  return reduce_by(trunc(poisson(F, G)), n, P, Q, trunc);
}

// Reduction by an ordered list of monomial rewrite rules lead -> replacement,
// applied until no rule fires. Termination is the caller's responsibility.
struct RewriteRule {
  Mono lead;
  MPoly replacement;
};

inline MPoly rewrite_reduce(const MPoly& F, const std::vector<RewriteRule>& rules, int max_steps = 100000) {
  MPoly r = F;
  for (int step = 0;; ++step) {
    if (step > max_steps) throw std::logic_error("rewrite_reduce: step limit exceeded");
    bool fired = false;
    MPoly next;
    for (auto& [m, c] : r.terms()) {
      bool done = false;
      for (auto& rule : rules) {
        if (auto q = mono_div(m, rule.lead)) {
          next += MPoly::term(c, *q) * rule.replacement;
          done = fired = true;
          break;
        }
      }
      if (!done) next.add_term(m, c);
    }
    r = next;
    if (!fired) return r;
  }
}

struct IdentityReport {
  std::string identity;
  int n = 0;
  bool ok = false;
  int residual_terms = 0;

  nlohmann::json to_json() const {
    return {{"identity", identity}, {"n", n}, {"status", ok ? "pass" : "fail"}, {"residual_terms", residual_terms}};
  }
};

inline IdentityReport identity_report(const std::string& name, int n, const MPoly& residual) {
  return {name, n, residual.is_zero(), static_cast<int>(residual.terms().size())};
}

}  // namespace hcs
