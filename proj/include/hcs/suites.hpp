#pragma once

// Named verification suites driven by the command-line front end. Each suite
// returns a deterministic report for a fixed configuration.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjstruct.hpp"
#include "diffop.hpp"
#include "diffpois.hpp"
#include "gl2action.hpp"
#include "hilbert.hpp"
#include "liehilb.hpp"

namespace hcs {

struct SuiteConfig {
  int n = 0;           // 0 runs the default range of the suite
  uint64_t seed = 1;
  double tol = 0;      // 0 keeps the per-suite default tolerance
  bool perturb_mu1 = false;
};

struct SuiteCase {
  std::string name;
  bool pass = true;
  double residual = 0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<SuiteCase> cases;

  int passed() const { return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const SuiteCase& c) { return c.pass; })); }
  int failed() const { return static_cast<int>(cases.size()) - passed(); }
  double worst_residual() const {
    double w = 0;
    for (auto& c : cases) w = std::max(w, c.residual);
    return w;
  }
  void add(std::string name, bool pass, double residual = 0, std::string detail = "") {
    cases.push_back({std::move(name), pass, residual, std::move(detail)});
  }
  nlohmann::json to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (auto& c : cases) {
      nlohmann::json j{{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}};
      if (!c.detail.empty()) j["detail"] = c.detail;
      cs.push_back(j);
    }
    return {{"suite", suite}, {"cases", cs}, {"pass", passed()}, {"fail", failed()}, {"worst_residual", worst_residual()}};
  }
};

struct UnknownSuite : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace suite_detail {

inline MPoly sym(const std::string& s) { return MPoly::var(s); }

inline std::pair<int, int> range(const SuiteConfig& c, int lo, int hi) { return c.n > 0 ? std::make_pair(c.n, c.n) : std::make_pair(lo, hi); }

inline std::string ns(int n) { return "n=" + std::to_string(n); }

// Variation of mu_l under v p^(k-1) with the indexing the bracket produces.
inline MPoly varmu_expected(int n, int k, int l, const MPoly& v) {
  auto mu = symbol_list("mu", n);
  auto at = [&](int i) { return i < static_cast<int>(mu.size()) ? mu[static_cast<size_t>(i)] : MPoly(); };
  if (l < k) return MPoly();
  if (l == k) return v.db() - at(2) * v.d() + MPoly(GaussRat(k - 1)) * at(2).d() * v;
  MPoly m = at(l - k + 2);
  return MPoly(GaussRat(k - 1)) * m.d() * v - MPoly(GaussRat(l - k + 1)) * m * v.d();
}

inline MPoly trunc_that(const MPoly& f, int n) {
  std::set<std::string> bases;
  for (int k = 1; k <= n; ++k) bases.insert("th" + std::to_string(k));
  return truncate_nilpotent(f, marks_bases(bases));
}

inline JetPoint random_jet(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  JetPoint p = JetPoint::make(n);
  for (int k = 2; k <= n; ++k) {
    p.mu[static_cast<size_t>(k)] = 0.4 * cplx(u(rng), u(rng));
    p.t[static_cast<size_t>(k)] = cplx(u(rng), u(rng));
  }
  // t_n near the positive axis keeps m_2 on the principal branch.
  p.t[static_cast<size_t>(n)] = std::polar(0.5 + 0.5 * std::abs(u(rng)), 0.3 * u(rng));
  return p;
}

inline GL2Elem random_gl2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return {cplx(1 + 0.2 * u(rng), 0.2 * u(rng)), 0.2 * cplx(u(rng), u(rng))};
}

inline double jet_dist(const JetPoint& p, const JetPoint& q) {
  double d = 0;
  for (int k = 2; k <= p.n; ++k) {
    d = std::max(d, std::abs(p.mu[static_cast<size_t>(k)] - q.mu[static_cast<size_t>(k)]));
    d = std::max(d, std::abs(p.t[static_cast<size_t>(k)] - q.t[static_cast<size_t>(k)]));
  }
  return d;
}

inline SlicePoint random_slice_point(const LieType& T, std::mt19937_64& rng, bool zero_tau) {
  std::uniform_int_distribution<int> c(-3, 3);
  int m = T.dim();
  SlicePoint p{T, std::vector<GaussRat>(static_cast<size_t>(m + 1), GaussRat(0)), std::vector<GaussRat>(static_cast<size_t>(m + 1), GaussRat(0))};
  bool odd = T.family != LieFamily::A;
  for (int k = 2; k <= m; ++k) {
    if (odd && k % 2) continue;
    if (T.family == LieFamily::D && k > 2 * T.rank - 2) continue;
    p.t[static_cast<size_t>(k)] = GaussRat(c(rng));
  }
  for (int k = 2; k <= m; ++k) {
    if (odd && k % 2) continue;
    if (T.family == LieFamily::D && zero_tau && k > 2 * T.rank - 2) continue;
    p.mu[static_cast<size_t>(k)] = GaussRat(c(rng));
  }
  if (T.family == LieFamily::D) {
    if (!zero_tau) {
      int v = c(rng);
      p.tau = GaussRat(v == 0 ? 1 : v);
    } else {
      p.sigma = GaussRat(c(rng));
    }
  }
  return p;
}

}  // namespace suite_detail

// {t_i,t_j} = {mu_i,mu_j} = 0 and {mu_i,t_j} = t_(j-i) with t entering the
// ideal as x^n + sum t_k x^(n-k); with the ideal x^n - sum t_k x^(n-k) the
// mixed brackets are {mu_i,t_j} = -t_(j-i) for j > i.
inline SuiteReport suite_poisson_table(const SuiteConfig& c) {
  SuiteReport r{"poisson-table", {}};
  auto [lo, hi] = suite_detail::range(c, 2, 5);
  for (int n = lo; n <= hi; ++n) {
    auto rep = poisson_table_check(n, -1, -1);
    r.add(suite_detail::ns(n) + " table, ideal x^n + sum t_k x^(n-k)", rep.mismatches == 0, rep.mismatches,
          rep.details.empty() ? "" : rep.details.front());
    PMat P = poisson_matrix(n);
    int bad = 0;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        MPoly want = j == i ? MPoly(1) : j > i ? -suite_detail::sym("t" + std::to_string(j - i)) : MPoly();
        if (P(n + i - 1, j - 1) != want || !P(i - 1, j - 1).is_zero() || !P(n + i - 1, n + j - 1).is_zero()) ++bad;
      }
    r.add(suite_detail::ns(n) + " table, ideal x^n - sum t_k x^(n-k)", bad == 0, bad);
  }
  return r;
}

inline SuiteReport suite_haiman(const SuiteConfig& c) {
  SuiteReport r{"haiman", {}};
  auto [lo, hi] = suite_detail::range(c, 1, 4);
  for (int n = lo; n <= hi; ++n) r.add(suite_detail::ns(n) + " single-row chart form equals symplectic matrix", haiman_form(n) == symplectic_matrix(n));
  return r;
}

inline SuiteReport suite_condition_C(const SuiteConfig& c) {
  using suite_detail::sym;
  SuiteReport r{"condition-C", {}};
  auto [lo, hi] = suite_detail::range(c, 2, 5);
  for (int n = lo; n <= hi; ++n) {
    int bad = 0;
    for (int k = 1; k <= n; ++k) {
      MPoly v = sym("v" + std::to_string(k));
      auto dm = vary_mu(n, symbol_list("mu", n), v * MPoly::var(pid(), k - 1));
      for (int l = 1; l <= n; ++l) bad += dm[static_cast<size_t>(l)] != suite_detail::varmu_expected(n, k, l, v);
    }
    r.add(suite_detail::ns(n) + " variation of mu under v_k p^(k-1)", bad == 0, bad);
    bool trivial = true;
    for (auto& H : {sym("w") * MPoly::var(pid(), n), sym("w") * MPoly::var(pid(), n - 1) * sym("pb"), sym("w") * sym("pb").pow(static_cast<unsigned>(n))})
      for (auto& x : vary_mu(n, symbol_list("mu", n), H)) trivial = trivial && x.is_zero();
    r.add(suite_detail::ns(n) + " degree >= n Hamiltonians act trivially", trivial);
    auto t = symbol_list("t", n);
    auto res0 = condition_C_residual(n, std::vector<MPoly>(static_cast<size_t>(n + 1)), t);
    bool holo = true;
    for (int k = 2; k <= n; ++k) holo = holo && res0[static_cast<size_t>(k)] == -t[static_cast<size_t>(k)].db();
    r.add(suite_detail::ns(n) + " trivial structure gives -dbar t_k", holo);
    if (n <= 3) {
      auto th = symbol_list("th", n), mu = symbol_list("muh", n);
      auto xi = parabolic_curvature(n, th, mu);
      auto res = condition_C_residual(n, mu, th);
      bool ok = true;
      for (int k = 2; k <= n; ++k) ok = ok && mod_derivative_order(suite_detail::trunc_that(xi[static_cast<size_t>(k)], n), 2) == res[static_cast<size_t>(k)];
      r.add(suite_detail::ns(n) + " curvature mod t^2 mod d^2 equals the condition", ok);
    }
  }
  return r;
}

inline SuiteReport suite_spectral_lagrangian(const SuiteConfig& c) {
  SuiteReport r{"spectral-lagrangian", {}};
  auto [lo, hi] = suite_detail::range(c, 2, 4);
  for (int n = lo; n <= hi; ++n) {
    auto mu = symbol_list("mu", n), t = symbol_list("t", n);
    MPoly br = c.perturb_mu1 ? spectral_bracket(n, mu, t, suite_detail::sym("eps")) : spectral_bracket(n, mu, t);
    MPoly top = br.coeff(pid(), n - 1);
    r.add(suite_detail::ns(n) + " coefficient of p^" + std::to_string(n - 1) + " vanishes", top.is_zero(), top.is_zero() ? 0 : 1,
          top.is_zero() ? "" : "coefficient " + top.to_string());
    auto res = condition_C_residual(n, mu, t);
    int bad = 0;
    for (int m = 0; m < n - 1; ++m) bad += br.coeff(pid(), m) != -res[static_cast<size_t>(n - m)];
    r.add(suite_detail::ns(n) + " lower coefficients equal minus the condition residual", bad == 0, bad);
  }
  return r;
}

inline SuiteReport suite_conjugation(const SuiteConfig& c) {
  using suite_detail::sym;
  SuiteReport r{"conjugation", {}};
  int mub2 = var_id("mub2");
  auto km = conj_mu(mubar_symbols(4), 4);
  r.add("2mu = 1/mub2", km[2] == Localized::unit_inverse(mub2));
  r.add("3mu = -mub3/mub2^3", km[3] == Localized(-sym("mub3"), mub2, 3));
  r.add("4mu = (-mub2 mub4 + 2 mub3^2)/mub2^5", km[4] == Localized(MPoly::parse("-mub2*mub4 + 2*mub3^2"), mub2, 5));
  auto [lo, hi] = suite_detail::range(c, 2, 5);
  for (int n = lo; n <= hi; ++n) {
    auto mb = mubar_symbols(n), tb = tbar_symbols(n);
    auto a = conj_t(mb, tb, n), b = conj_t_resultant(mb, tb, n);
    r.add(suite_detail::ns(n) + " nt = mub2^n tb_n", a[static_cast<size_t>(n)] == sym("mub2").pow(static_cast<unsigned>(n)) * tb[static_cast<size_t>(n)]);
    bool same = true;
    for (int k = 2; k <= n; ++k) same = same && a[static_cast<size_t>(k)] == b[static_cast<size_t>(k)];
    r.add(suite_detail::ns(n) + " partition formula equals resultant elimination", same);
  }
  double tol = c.tol > 0 ? c.tol : 1e-10;
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = lo; n <= hi; ++n) {
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<cplx> mu(static_cast<size_t>(n + 1), 0.0), t(static_cast<size_t>(n + 1), 0.0);
      for (int k = 2; k <= n; ++k) {
        mu[static_cast<size_t>(k)] = 0.3 * cplx(u(rng), u(rng));
        t[static_cast<size_t>(k)] = 1e-3 * cplx(u(rng), u(rng));
      }
      if (std::abs(mu[2]) < 0.1) mu[2] = 0.2;
      auto d = conj_involution_check(mu, t, n);
      worst = std::max({worst, d.body, d.soul});
    }
    r.add(suite_detail::ns(n) + " involution on 100 random points", worst < tol, worst);
  }
  return r;
}

inline SuiteReport suite_gl2(const SuiteConfig& c) {
  using namespace suite_detail;
  SuiteReport r{"gl2", {}};
  std::mt19937_64 rng(c.seed);
  double closed = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_jet(rng, 2);
    GL2Elem g = random_gl2(rng);
    cplx m2 = std::sqrt(std::conj(p.t[2]) / p.t[2]);
    cplx s = g.a + std::conj(g.b) * std::conj(p.mu[2]) * m2;
    auto q = act(g, p);
    closed = std::max({closed, std::abs(q.t[2] - s * s * p.t[2]), std::abs(q.mu[2] - (g.a * p.mu[2] + std::conj(g.b) * m2) / s)});
  }
  r.add("n=2 closed forms", closed < 1e-12, closed);
  double tol = c.tol > 0 ? c.tol : 1e-8;
  auto [lo, hi] = range(c, 2, 4);
  for (int n = lo; n <= hi; ++n) {
    double law = 0, top = 0;
    for (int trial = 0; trial < 50; ++trial) {
      auto p = random_jet(rng, n);
      GL2Elem g = random_gl2(rng), h = random_gl2(rng);
      law = std::max(law, jet_dist(act(g * h, p), act(g, act(h, p))));
      cplx m2 = mbar_coeffs(p.t, n)[2];
      cplx s = g.a + std::conj(g.b) * std::conj(p.mu[2]) * m2;
      top = std::max(top, std::abs(act(g, p).t[static_cast<size_t>(n)] - std::pow(s, n) * p.t[static_cast<size_t>(n)]));
    }
    r.add(ns(n) + " group law on 50 triples", law < tol, law);
    r.add(ns(n) + " top coefficient t_n' = s^n t_n", top < 1e-11, top);
  }
  return r;
}

// Orientation [nabla^n, nablabar]: xi_2 = -(dbar - mu2 d - 2 d mu2) t2 - d^3 mu2 / 2.
inline SuiteReport suite_curvature(const SuiteConfig& c) {
  using suite_detail::sym;
  SuiteReport r{"curvature", {}};
  auto xi2 = parabolic_curvature(2, symbol_list("th", 2), symbol_list("muh", 2));
  MPoly t2 = sym("th2"), mu2 = sym("muh2");
  MPoly expect = -(t2.db() - mu2 * t2.d() - MPoly(2) * mu2.d() * t2) - MPoly(GaussRat::frac(1, 2)) * mu2.d(3);
  r.add("n=2 closed form", xi2[2] == expect);
  auto [lo, hi] = suite_detail::range(c, 2, 4);
  for (int n = lo; n <= hi; ++n) {
    auto t = symbol_list("th", n), mu = symbol_list("muh", n);
    auto F = curvature_matrix(connection_matrices(n, t, mu));
    auto xi = parabolic_curvature(n, t, mu);
    bool cols = true, last = F(n - 1, n - 1).is_zero();
    for (int i = 0; i + 1 < n; ++i)
      for (int j = 0; j < n; ++j) cols = cols && F(j, i).is_zero();
    for (int k = 2; k <= n; ++k) last = last && F(n - k, n - 1) == xi[static_cast<size_t>(k)];
    r.add(suite_detail::ns(n) + " matrix curvature vanishes off the last column", cols);
    r.add(suite_detail::ns(n) + " last column equals operator curvature", last);
  }
  return r;
}

inline const std::vector<std::string>& lie_types() {
  static const std::vector<std::string> t{"A1", "A2", "A3", "A4", "B2", "B3", "C2", "C3", "D3", "D4"};
  return t;
}

inline SuiteReport suite_lie(const SuiteConfig& c) {
  SuiteReport r{"lie", {}};
  std::mt19937_64 rng(c.seed);
  for (auto& s : lie_types()) {
    auto T = LieType::parse(s);
    if (c.n > 0 && T.rank != c.n) continue;
    auto f = principal_nilpotent<GaussRat>(T);
    int dz = centralizer(f, T).dim;
    r.add(s + " dim Z(f) = rank", dz == T.rank, std::abs(dz - T.rank));
    int bad = 0;
    for (int trial = 0; trial < 50; ++trial) {
      auto p = suite_detail::random_slice_point(T, rng, T.family == LieFamily::D && trial % 2);
      QMat A = p.A(), B = p.B();
      bad += !commutator(A, B).is_zero() || centralizer(A, T, B).dim < T.rank;
    }
    r.add(s + " dim Z(A,B) >= rank on 50 random pairs", bad == 0, bad);
    if (T.family != LieFamily::A && T.dim() <= 7) {
      bool inv = true;
      for (int trial = 0; trial < 3; ++trial)
        inv = inv && minus_id_invariant(idealic_map(suite_detail::random_slice_point(T, rng, T.family == LieFamily::D && trial == 2)).ideal);
      r.add(s + " ideals are (-id)-invariant", inv);
    }
    if (T.family == LieFamily::D) {
      int n = T.rank;
      bool cyc = true;
      for (int trial = 0; trial < 10; ++trial) {
        auto p = suite_detail::random_slice_point(T, rng, false);
        cyc = cyc && algebra_dim(p.A(), QMat(2 * n, 2 * n)) == 2 * n;
        p.tau = GaussRat(0);
        cyc = cyc && algebra_dim(p.A(), QMat(2 * n, 2 * n)) == 2 * n - 1;
      }
      r.add(s + " slice point cyclic iff tau != 0", cyc);
    }
  }
  return r;
}

// The displayed S squares to (-1)^(n-1) f^(2n-2); the top relation is checked
// with that factor, and the factor itself is reported in the detail.
inline SuiteReport suite_dn_relations(const SuiteConfig& c) {
  SuiteReport r{"dn-relations", {}};
  auto [lo, hi] = suite_detail::range(c, 3, 5);
  for (int n = std::max(lo, 3); n <= hi; ++n) {
    auto rep = dn_relations(n);
    std::string s = "D" + std::to_string(n);
    r.add(s + " S in the algebra", rep.S_in_algebra);
    r.add(s + " fS = Sf = 0", rep.fS_eq_Sf && rep.fS_zero);
    r.add(s + " xy relation", rep.xy_relation);
    r.add(s + " lower nu identities", rep.nu_lower);
    int expect = n % 2 ? 1 : -1;
    r.add(s + " S^2 = (-1)^(n-1) f^(2n-2)", rep.S2_factor == expect, 0, "factor " + std::to_string(rep.S2_factor));
    r.add(s + " top nu identity with the S^2 factor", rep.nu_top_with_factor);
  }
  return r;
}

inline std::vector<std::string> suite_names() {
  return {"poisson-table", "haiman", "condition-C", "spectral-lagrangian", "conjugation", "gl2", "curvature", "lie", "dn-relations", "all"};
}

inline SuiteReport run_suite(const std::string& name, const SuiteConfig& c) {
  if (name == "poisson-table") return suite_poisson_table(c);
  if (name == "haiman") return suite_haiman(c);
  if (name == "condition-C") return suite_condition_C(c);
  if (name == "spectral-lagrangian") return suite_spectral_lagrangian(c);
  if (name == "conjugation") return suite_conjugation(c);
  if (name == "gl2") return suite_gl2(c);
  if (name == "curvature") return suite_curvature(c);
  if (name == "lie") return suite_lie(c);
  if (name == "dn-relations") return suite_dn_relations(c);
  if (name == "all") {
    SuiteReport all{"all", {}};
    auto names = suite_names();
    for (size_t i = 0; i + 1 < names.size(); ++i) {
      SuiteConfig sc = c;
      sc.n = 0;
      for (auto& k : run_suite(names[i], sc).cases) all.cases.push_back({names[i] + ": " + k.name, k.pass, k.residual, k.detail});
    }
    return all;
  }
  throw UnknownSuite("unknown suite: " + name);
}

}  // namespace hcs
