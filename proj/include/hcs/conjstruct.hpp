#pragma once

#include <algorithm>
#include <complex>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "linalg.hpp"
#include "localized.hpp"
#include "mpoly.hpp"

namespace hcs {

// Partitions of l as multiplicity vectors m (m[j-1] = number of parts equal to j),
// in lexicographic order of the vectors.
inline std::vector<std::vector<int>> partitions(int l) {
  std::vector<std::vector<int>> out;
  std::vector<int> m(static_cast<size_t>(l), 0);
  std::function<void(int, int)> rec = [&](int j, int rest) {
    if (j == 0) {
      if (rest == 0) out.push_back(m);
      return;
    }
    for (int c = 0; c * j <= rest; ++c) {
      m[static_cast<size_t>(j - 1)] = c;
      rec(j - 1, rest - c * j);
    }
    m[static_cast<size_t>(j - 1)] = 0;
  };
  if (l == 0) return {{}};
  rec(l, l);
  std::sort(out.begin(), out.end());
  return out;
}

inline int parts(const std::vector<int>& m) {
  int s = 0;
  for (int c : m) s += c;
  return s;
}

// Reversion of y = sum_{k>=2} a[k] x^(k-1) modulo x^n: returns c with
// x = sum_{k>=2} c[k] y^(k-1). inv is the inverse of a[2].
template <class R>
std::vector<R> revert_series(const std::vector<R>& a, const R& inv, int n) {
  std::vector<R> c(static_cast<size_t>(n + 1), R(0));
  if (n < 2) return c;
  c[2] = inv;
  auto mul = [n](const std::vector<R>& u, const std::vector<R>& v) {
    std::vector<R> w(static_cast<size_t>(n), R(0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; i + j < n; ++j)
        if (!is_zero_s(u[static_cast<size_t>(i)]) && !is_zero_s(v[static_cast<size_t>(j)]))
          w[static_cast<size_t>(i + j)] = w[static_cast<size_t>(i + j)] + u[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
    return w;
  };
  for (int j = 2; j <= n - 1; ++j) {
    // g(y) as a y-power series with the current coefficients.
    std::vector<R> g(static_cast<size_t>(n), R(0));
    for (int k = 2; k <= j; ++k) g[static_cast<size_t>(k - 1)] = c[static_cast<size_t>(k)];
    std::vector<R> pw = g;
    R acc(0);
    for (int k = 2; k <= n && k < static_cast<int>(a.size()); ++k) {
      acc = acc + a[static_cast<size_t>(k)] * pw[static_cast<size_t>(j)];
      pw = mul(pw, g);
    }
    c[static_cast<size_t>(j + 1)] = R(0) - acc * inv;
  }
  return c;
}

// Names of conjugate symbols, e.g. mub2, tb3.
inline MPoly mubar_sym(int k) { return MPoly::var("mub" + std::to_string(k)); }
inline MPoly tbar_sym(int k) { return MPoly::var("tb" + std::to_string(k)); }

inline std::vector<MPoly> mubar_symbols(int n) {
  std::vector<MPoly> r(static_cast<size_t>(n + 1));
  for (int k = 2; k <= n; ++k) r[static_cast<size_t>(k)] = mubar_sym(k);
  return r;
}
inline std::vector<MPoly> tbar_symbols(int n) {
  std::vector<MPoly> r(static_cast<size_t>(n + 1));
  for (int k = 2; k <= n; ++k) r[static_cast<size_t>(k)] = tbar_sym(k);
  return r;
}

// Conjugated Beltrami coefficients by series reversion; mubar[2] must be a single variable.
inline std::vector<Localized> conj_mu_reversion(const std::vector<MPoly>& mubar, int n) {
  auto vars = mubar.at(2).variables();
  if (vars.size() != 1 || mubar[2] != MPoly::var(*vars.begin()))
    throw std::invalid_argument("conj_mu: the leading coefficient must be a single symbol");
  int u = *vars.begin();
  std::vector<Localized> a(static_cast<size_t>(n + 1));
  for (int k = 2; k <= n && k < static_cast<int>(mubar.size()); ++k) a[static_cast<size_t>(k)] = Localized(mubar[static_cast<size_t>(k)], u);
  return revert_series<Localized>(a, Localized::unit_inverse(u), n);
}

// Closed partition-sum form of the same coefficients.
inline std::vector<Localized> conj_mu_partition(const std::vector<MPoly>& mubar, int n) {
  int u = *mubar.at(2).variables().begin();
  std::vector<Localized> out(static_cast<size_t>(n + 1));
  for (int k = 2; k <= n; ++k) {
    MPoly num;
    for (auto& m : partitions(k - 2)) {
      int np = parts(m);
      bool fits = true;
      MPoly mono = mubar[2].pow(static_cast<unsigned>(k - 2 - np));
      mpz_class den = factorial(static_cast<unsigned>(k - 1));
      for (size_t j = 0; j < m.size(); ++j) {
        if (m[j] == 0) continue;
        if (static_cast<int>(j) + 3 > n) { fits = false; break; }
        mono = mono * mubar[j + 3].pow(static_cast<unsigned>(m[j]));
        den *= factorial(static_cast<unsigned>(m[j]));
      }
      if (!fits) continue;
      mpq_class c(factorial(static_cast<unsigned>(np + k - 2)), den);
      if (np % 2) c = -c;
      num += MPoly(GaussRat(c)) * mono;
    }
    out[static_cast<size_t>(k)] = Localized(num, u, 2 * k - 3);
  }
  return out;
}

// Both ways; throws when they disagree, returns the reversion.
inline std::vector<Localized> conj_mu(const std::vector<MPoly>& mubar, int n) {
  auto a = conj_mu_reversion(mubar, n);
  auto b = conj_mu_partition(mubar, n);
  for (int k = 2; k <= n; ++k)
    if (a[static_cast<size_t>(k)] != b[static_cast<size_t>(k)])
      throw std::logic_error("conj_mu: reversion and partition formula disagree at k=" + std::to_string(k));
  return a;
}

// Conjugated t_k to first order by the partition formula.
template <class R>
std::vector<R> conj_t_formula(const std::vector<R>& mubar, const std::vector<R>& tbar, int n) {
  std::vector<R> out(static_cast<size_t>(n + 1), R(0));
  for (int k = 2; k <= n; ++k)
    for (int l = k; l <= n; ++l) {
      R inner(0);
      for (auto& m : partitions(l)) {
        if (parts(m) != k) continue;
        mpz_class den = 1;
        R mono(1);
        bool fits = true;
        for (size_t j = 0; j < m.size(); ++j) {
          if (m[j] == 0) continue;
          if (static_cast<int>(j) + 2 > n) { fits = false; break; }
          for (int e = 0; e < m[j]; ++e) mono = mono * mubar[j + 2];
          den *= factorial(static_cast<unsigned>(m[j]));
        }
        if (!fits) continue;
        mpz_class num = mpz_class(l) * factorial(static_cast<unsigned>(k - 1));
        inner = inner + RatOf<R>::make(num.get_si(), den.get_si()) * mono;
      }
      out[static_cast<size_t>(k)] = out[static_cast<size_t>(k)] + tbar[static_cast<size_t>(l)] * inner;
    }
  return out;
}

inline std::vector<MPoly> conj_t(const std::vector<MPoly>& mubar, const std::vector<MPoly>& tbar, int n) {
  return conj_t_formula<MPoly>(mubar, tbar, n);
}

// Conjugated t_k mod t^2 from eliminating pb between pb^n - sum tb_k pb^(n-k) and
// sum mub_k pb^(k-1) - p. Entry 1 is the p^(n-1) coefficient, which vanishes
// for the barycentric mub_1.
inline std::vector<MPoly> conj_t_resultant(const std::vector<MPoly>& mubar, const std::vector<MPoly>& tbar, int n) {
  int p = var_id("p");
  std::set<std::string> bases;
  for (int k = 2; k <= n; ++k)
    for (int v : tbar[static_cast<size_t>(k)].variables()) bases.insert(Registry::get().info(v).base);
  auto marked = marks_bases(bases);
  MPoly mu1;
  for (int k = 2; k <= n - 1; ++k) mu1 -= MPoly(GaussRat::frac(k, n)) * tbar[static_cast<size_t>(k)] * mubar[static_cast<size_t>(k + 1)];
  UPoly<MPoly> f(static_cast<size_t>(n + 1)), g(static_cast<size_t>(n));
  f[static_cast<size_t>(n)] = MPoly(1);
  for (int k = 2; k <= n; ++k) f[static_cast<size_t>(n - k)] = -tbar[static_cast<size_t>(k)];
  g[0] = mu1 - MPoly::var(p);
  for (int k = 2; k <= n; ++k) g[static_cast<size_t>(k - 1)] = mubar[static_cast<size_t>(k)];
  MPoly r = truncate_nilpotent(resultant(f, g), marked);
  MPoly lead = r.coeff(p, n);
  GaussRat c = lead.constant_term();
  if (lead != MPoly(c) || c.is_zero()) throw std::logic_error("conj_t_resultant: unexpected leading coefficient");
  std::vector<MPoly> out(static_cast<size_t>(n + 1));
  MPoly s(GaussRat(-1) / c);
  for (int k = 1; k <= n; ++k) out[static_cast<size_t>(k)] = s * r.coeff(p, n - k);
  return out;
}

// Numeric conjugation of (mu, t): returns (kmu, kt) from the complex
// conjugates of the inputs. Index 0 and 1 are unused.
struct ConjPoint {
  int n = 0;
  std::vector<cplx> kmu, kt;

  nlohmann::json to_json() const {
    auto arr = [](const std::vector<cplx>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (size_t k = 2; k < v.size(); ++k) a.push_back({v[k].real(), v[k].imag()});
      return a;
    };
    return {{"n", n}, {"conjugated", true}, {"mu", arr(kmu)}, {"t", arr(kt)}};
  }
};

inline ConjPoint conj_numeric(const std::vector<cplx>& mu, const std::vector<cplx>& t, int n) {
  std::vector<cplx> mb(static_cast<size_t>(n + 1), 0.0), tb(static_cast<size_t>(n + 1), 0.0);
  for (int k = 2; k <= n; ++k) {
    mb[static_cast<size_t>(k)] = std::conj(mu.at(static_cast<size_t>(k)));
    tb[static_cast<size_t>(k)] = std::conj(t.at(static_cast<size_t>(k)));
  }
  if (std::abs(mb[2]) < 1e-14) throw std::domain_error("conjugation: degenerate structure (mu2 = 0)");
  ConjPoint r;
  r.n = n;
  r.kmu = revert_series<cplx>(mb, 1.0 / mb[2], n);
  r.kt = conj_t_formula<cplx>(mb, tb, n);
  return r;
}

struct InvolutionDeviation {
  double body = 0, soul = 0;
};

// Applies the conjugation twice and measures the distance to the input.
inline InvolutionDeviation conj_involution_check(const std::vector<cplx>& mu, const std::vector<cplx>& t, int n) {
  ConjPoint once = conj_numeric(mu, t, n);
  ConjPoint twice = conj_numeric(once.kmu, once.kt, n);
  InvolutionDeviation d;
  for (int k = 2; k <= n; ++k) {
    d.body = std::max(d.body, std::abs(twice.kmu[static_cast<size_t>(k)] - mu[static_cast<size_t>(k)]));
    d.soul = std::max(d.soul, std::abs(twice.kt[static_cast<size_t>(k)] - t[static_cast<size_t>(k)]));
  }
  return d;
}

}  // namespace hcs
