#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hilbert.hpp"
#include "linalg.hpp"
#include "mpoly.hpp"

namespace hcs {

enum class LieFamily { A, B, C, D };

struct NotPrincipal : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConstraintError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LieType {
  LieFamily family = LieFamily::A;
  int rank = 1;

  // Size of the defining representation.
  int dim() const {
    switch (family) {
      case LieFamily::A: return rank + 1;
      case LieFamily::B: return 2 * rank + 1;
      default: return 2 * rank;
    }
  }
  std::string name() const { return std::string(1, "ABCD"[static_cast<int>(family)]) + std::to_string(rank); }
  static LieType parse(const std::string& s) {
    if (s.size() < 2) throw std::invalid_argument("LieType: expected e.g. A2, B3");
    auto pos = std::string("ABCD").find(static_cast<char>(std::toupper(static_cast<unsigned char>(s[0]))));
    if (pos == std::string::npos) throw std::invalid_argument("LieType: unknown family " + s.substr(0, 1));
    LieType t{static_cast<LieFamily>(pos), std::stoi(s.substr(1))};
    int lo = t.family == LieFamily::A ? 1 : t.family == LieFamily::D ? 3 : 2;
    if (t.rank < lo) throw std::invalid_argument("LieType: rank too small for " + s);
    return t;
  }
};

namespace lie_detail {

// 1-based entry assignment.
template <class R>
void put(Mat<R>& m, int i, int j, const R& v) { m(i - 1, j - 1) = v; }

}  // namespace lie_detail

// Bilinear form defining the algebra: anti-diagonal for B and D, the standard
// symplectic form sum e_i ^ e_(n+i) for C; empty for A.
template <class R>
Mat<R> invariant_form(const LieType& T) {
  int m = T.dim();
  Mat<R> g(m, m);
  if (T.family == LieFamily::B || T.family == LieFamily::D) {
    for (int i = 0; i < m; ++i) g(i, m - 1 - i) = R(1);
  } else if (T.family == LieFamily::C) {
    int n = T.rank;
    for (int i = 0; i < n; ++i) {
      g(i, n + i) = R(1);
      g(n + i, i) = R(-1);
    }
  }
  return g;
}

// Defect of the algebra constraint: trace for A, X^T g + g X otherwise.
template <class R>
Mat<R> constraint_defect(const Mat<R>& X, const LieType& T) {
  if (T.family == LieFamily::A) {
    Mat<R> d(1, 1);
    d(0, 0) = X.trace();
    return d;
  }
  auto g = invariant_form<R>(T);
  return X.transpose() * g + g * X;
}

template <class R>
bool in_algebra(const Mat<R>& X, const LieType& T) {
  return X.rows() == T.dim() && X.cols() == T.dim() && constraint_defect(X, T).is_zero();
}

// Projection onto the algebra along its complement (idempotent).
inline QMat project_to_algebra(const QMat& X, const LieType& T) {
  int m = T.dim();
  if (T.family == LieFamily::A) return X - (X.trace() / GaussRat(m)) * QMat::identity(m);
  auto g = invariant_form<GaussRat>(T);
  // g^-1 = g^T for both forms used here.
  QMat adj = g.transpose() * X.transpose() * g;
  return GaussRat::frac(1, 2) * (X - adj);
}

template <class R>
Mat<R> principal_nilpotent(const LieType& T) {
  using lie_detail::put;
  int m = T.dim(), n = T.rank;
  Mat<R> f(m, m);
  switch (T.family) {
    case LieFamily::A:
      for (int i = 1; i < m; ++i) put(f, i + 1, i, R(1));
      break;
    case LieFamily::B:
      for (int i = 1; i <= n; ++i) put(f, i + 1, i, R(1));
      for (int i = n + 1; i <= 2 * n; ++i) put(f, i + 1, i, R(-1));
      break;
    case LieFamily::C:
      for (int i = 1; i < n; ++i) {
        put(f, i + 1, i, R(1));
        put(f, n + i, n + i + 1, R(-1));
      }
      put(f, 2 * n, n, R(1));
      break;
    case LieFamily::D:
      for (int i = 1; i < n; ++i) put(f, i + 1, i, R(1));
      put(f, n + 1, n - 1, R(1));
      put(f, n + 2, n, R(-1));
      put(f, n + 2, n + 1, R(-1));
      for (int i = n + 2; i < 2 * n; ++i) put(f, i + 1, i, R(-1));
      break;
  }
  return f;
}

// The extra centralizer element of f in type D.
template <class R>
Mat<R> dn_S(int n) {
  using lie_detail::put;
  Mat<R> s(2 * n, 2 * n);
  put(s, n, 1, R(1));
  put(s, n + 1, 1, R(-1));
  put(s, 2 * n, n, R(1));
  put(s, 2 * n, n + 1, R(-1));
  return s;
}

// Slice parameters: t[k] for A (k = 2..n); t[2k] for B, C (k = 1..rank) and
// D (k = 1..rank-1), plus tau for D. Vectors are indexed by the subscript.
template <class R>
Mat<R> principal_slice(const LieType& T, const std::vector<R>& t, const R& tau = R(0)) {
  using lie_detail::put;
  auto f = principal_nilpotent<R>(T);
  int m = T.dim(), n = T.rank;
  auto at = [&](int k) { return k < static_cast<int>(t.size()) ? t[static_cast<size_t>(k)] : R(0); };
  switch (T.family) {
    case LieFamily::A:
      // Companion matrix with last column -t_m..-t_2, so det(x - A) = x^m + sum t_k x^(m-k).
      for (int k = 2; k <= m; ++k) put(f, m + 1 - k, m, R(0) - at(k));
      break;
    case LieFamily::B:
      for (int k = 1; k <= n; ++k) {
        put(f, n + 1 - k, n + k, at(2 * k));
        put(f, n + 2 - k, n + 1 + k, R(0) - at(2 * k));
      }
      break;
    case LieFamily::C:
      for (int k = 1; k <= n; ++k) put(f, n + 1 - k, 2 * n + 1 - k, at(2 * k));
      break;
    case LieFamily::D:
      for (int k = 1; k <= n - 1; ++k) {
        put(f, n - k, n + k, at(2 * k));
        put(f, n + 1 - k, n + 1 + k, R(0) - at(2 * k));
      }
      put(f, n - 1, n, at(2));
      put(f, n + 1, n + 2, R(0) - at(2));
      f = f + tau * dn_S<R>(n).transpose();
      break;
  }
  if (!in_algebra(f, T)) throw ConstraintError("principal_slice: assembled matrix is not in the algebra");
  return f;
}

// Characteristic polynomial of the slice, lowest coefficient first. The tau
// term of type D is (-1)^n 4 tau^2.
template <class R>
UPoly<R> slice_charpoly_formula(const LieType& T, const std::vector<R>& t, const R& tau = R(0)) {
  int m = T.dim(), n = T.rank;
  auto at = [&](int k) { return k < static_cast<int>(t.size()) ? t[static_cast<size_t>(k)] : R(0); };
  UPoly<R> c(static_cast<size_t>(m + 1), R(0));
  c[static_cast<size_t>(m)] = R(1);
  switch (T.family) {
    case LieFamily::A:
      for (int k = 2; k <= m; ++k) c[static_cast<size_t>(m - k)] = at(k);
      break;
    case LieFamily::B:
      for (int k = 1; k <= n; ++k) c[static_cast<size_t>(m - 2 * k)] = R(k % 2 ? -2 : 2) * at(2 * k);
      break;
    case LieFamily::C:
      for (int k = 1; k <= n; ++k) c[static_cast<size_t>(m - 2 * k)] = R(k % 2 ? -1 : 1) * at(2 * k);
      break;
    case LieFamily::D:
      for (int k = 1; k <= n - 1; ++k) c[static_cast<size_t>(m - 2 * k)] = R(k % 2 ? -4 : 4) * at(2 * k);
      c[0] = R(n % 2 ? -4 : 4) * tau * tau;
      break;
  }
  return c;
}

struct CentralizerResult {
  int dim = 0;
  std::vector<QMat> basis;
};

// Basis of the algebra as matrices (exact nullspace of the constraint map).
inline std::vector<QMat> algebra_basis(const LieType& T) {
  int m = T.dim();
  QMat sys(m * m, m * m);
  for (int e = 0; e < m * m; ++e) {
    QMat E = QMat::unit(m, e / m, e % m);
    auto d = constraint_defect(E, T);
    for (int r = 0; r < d.rows() * d.cols(); ++r) sys(r, e) = d.data()[static_cast<size_t>(r)];
  }
  std::vector<QMat> out;
  for (auto& v : nullspace_exact(sys)) out.emplace_back(m, m, v);
  return out;
}

// Exact common centralizer of A (and B) inside the algebra.
inline CentralizerResult centralizer(const QMat& A, const LieType& T, const std::optional<QMat>& B = std::nullopt) {
  int m = T.dim();
  if (!in_algebra(A, T) || (B && !in_algebra(*B, T))) throw ConstraintError("centralizer: input not in the algebra");
  auto basis = algebra_basis(T);
  int nb = static_cast<int>(basis.size());
  int blocks = B ? 2 : 1;
  QMat sys(blocks * m * m, nb);
  for (int j = 0; j < nb; ++j) {
    auto ca = commutator(A, basis[static_cast<size_t>(j)]);
    for (int r = 0; r < m * m; ++r) sys(r, j) = ca.data()[static_cast<size_t>(r)];
    if (B) {
      auto cb = commutator(*B, basis[static_cast<size_t>(j)]);
      for (int r = 0; r < m * m; ++r) sys(m * m + r, j) = cb.data()[static_cast<size_t>(r)];
    }
  }
  CentralizerResult res;
  for (auto& v : nullspace_exact(sys)) {
    QMat X(m, m);
    for (int j = 0; j < nb; ++j) X = X + v[static_cast<size_t>(j)] * basis[static_cast<size_t>(j)];
    res.basis.push_back(X);
  }
  res.dim = static_cast<int>(res.basis.size());
  return res;
}

inline bool is_regular(const QMat& A, const LieType& T) { return centralizer(A, T).dim == T.rank; }

inline bool in_hilb(const QMat& A, const QMat& B, const LieType& T) {
  if (!commutator(A, B).is_zero()) return false;
  return centralizer(A, T, B).dim == T.rank;
}

// Point of the regular part: slice parameters and centralizer parameters.
// mu[k] multiplies A^(k-1) (odd k-1 only for B, C, D); sigma multiplies S_t in type D.
struct SlicePoint {
  LieType type;
  std::vector<GaussRat> t, mu;
  GaussRat tau{0}, sigma{0};

  QMat A() const { return principal_slice<GaussRat>(type, t, tau); }
  QMat B() const;
  nlohmann::json to_json() const;
  static SlicePoint from_json(const nlohmann::json& j);
};

// S_t = S + t_(2n-2) S^T, the non-polynomial centralizer element when tau = 0.
inline QMat dn_S_t(int n, const GaussRat& t_top) {
  auto S = dn_S<GaussRat>(n);
  return S + t_top * S.transpose();
}

inline QMat SlicePoint::B() const {
  QMat a = A();
  int m = type.dim();
  QMat b(m, m), pw = QMat::identity(m);
  for (int k = 1; k <= m && k < static_cast<int>(mu.size()); ++k) {
    if (k > 1) pw = pw * a;
    if (!mu[static_cast<size_t>(k)].is_zero()) b = b + mu[static_cast<size_t>(k)] * pw;
  }
  if (type.family == LieFamily::A) {
    b = b - (b.trace() / GaussRat(m)) * QMat::identity(m);
  } else if (type.family == LieFamily::D && !sigma.is_zero()) {
    if (!tau.is_zero()) throw ConstraintError("SlicePoint: sigma requires tau = 0");
    int n = type.rank;
    GaussRat top = 2 * n - 2 < static_cast<int>(t.size()) ? t[static_cast<size_t>(2 * n - 2)] : GaussRat(0);
    b = b + sigma * dn_S_t(n, top);
  }
  if (!in_algebra(b, type)) throw ConstraintError("SlicePoint: centralizer element not in the algebra (use odd powers)");
  return b;
}

inline nlohmann::json SlicePoint::to_json() const {
  auto arr = [](const std::vector<GaussRat>& v) {
    nlohmann::json a = nlohmann::json::object();
    for (size_t k = 0; k < v.size(); ++k)
      if (!v[k].is_zero()) a[std::to_string(k)] = v[k].to_string();
    return a;
  };
  return {{"type", type.name()}, {"t", arr(t)}, {"mu", arr(mu)}, {"tau", tau.to_string()}, {"sigma", sigma.to_string()}};
}

// Entries are exact numbers as text (or integers); missing indices are zero.
inline SlicePoint SlicePoint::from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    return v.is_string() ? MPoly::parse(v.get<std::string>()).constant_term() : GaussRat(v.get<long>());
  };
  SlicePoint p{LieType::parse(j.at("type").get<std::string>()), {}, {}};
  int m = p.type.dim();
  auto read = [&](const char* key, std::vector<GaussRat>& v) {
    v.assign(static_cast<size_t>(m + 1), GaussRat(0));
    if (!j.contains(key)) return;
    for (auto& [k, val] : j.at(key).items()) {
      int idx = std::stoi(k);
      if (idx < 0 || idx > m) throw std::invalid_argument(std::string("SlicePoint: index out of range in ") + key);
      v[static_cast<size_t>(idx)] = num(val);
    }
  };
  read("t", p.t);
  read("mu", p.mu);
  if (j.contains("tau")) p.tau = num(j.at("tau"));
  if (j.contains("sigma")) p.sigma = num(j.at("sigma"));
  return p;
}

// Common value of the simple-root entries of B relative to the principal
// nilpotent A (the positions of the fixed f), certified by irregularity of B - mu2 A.
inline GaussRat extract_mu2(const QMat& A, const QMat& B, const LieType& T) {
  auto f = principal_nilpotent<GaussRat>(T);
  int m = T.dim();
  if (A.rows() != m || !A.pow(static_cast<unsigned>(m)).is_zero()) throw NotPrincipal("extract_mu2: A is not nilpotent");
  std::optional<GaussRat> value;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (f(i, j).is_zero()) continue;
      if (A(i, j).is_zero()) throw NotPrincipal("extract_mu2: a simple-root entry of A vanishes");
      GaussRat r = B(i, j) / A(i, j);
      if (value && *value != r) throw std::invalid_argument("extract_mu2: simple-root ratios disagree (B not in Z(A)?)");
      value = r;
    }
  if (!is_regular(A, T)) throw NotPrincipal("extract_mu2: A is not regular");
  if (is_regular(B - *value * A, T)) throw std::logic_error("extract_mu2: certificate failed, B - mu2 A is regular");
  return *value;
}

// Polynomial in x with coefficients c (lowest first).
inline MPoly x_poly(const std::vector<GaussRat>& c) {
  MPoly r;
  for (size_t k = 0; k < c.size(); ++k) r += MPoly(c[k]) * MPoly::var(xid(), static_cast<int>(k));
  return r;
}

// Coefficients c with M = sum_k c[k] A^k, k < deg; nullopt if M is not such a polynomial.
inline std::optional<std::vector<GaussRat>> as_polynomial_in(const QMat& M, const QMat& A, int deg) {
  int m = A.rows();
  QMat sys(m * m, deg + 1);
  QMat pw = QMat::identity(m);
  for (int k = 0; k < deg; ++k) {
    for (int r = 0; r < m * m; ++r) sys(r, k) = pw.data()[static_cast<size_t>(r)];
    pw = pw * A;
  }
  for (int r = 0; r < m * m; ++r) sys(r, deg) = M.data()[static_cast<size_t>(r)];
  auto piv = rref(sys);
  if (!piv.empty() && piv.back() == deg) return std::nullopt;
  std::vector<GaussRat> c(static_cast<size_t>(deg), GaussRat(0));
  for (size_t r = 0; r < piv.size(); ++r) c[static_cast<size_t>(piv[r])] = sys(static_cast<int>(r), deg);
  return c;
}

struct IdealicResult {
  Ideal ideal;
  std::string chart;          // partition of the chart the generators are written in
  bool noncontinuous = false;  // type D limit prescription at tau = sigma = 0

  nlohmann::json to_json() const {
    auto j = ideal.to_json();
    j["chart"] = chart;
    j["noncontinuous"] = noncontinuous;
    return j;
  }
};

// Ideal attached to a regular slice point. Cyclic points give
// <chi(x), -y + Q(x)>; type D points with tau = 0 use the three-generator chart
// <chi(x)/x, xy - x Q(x), y^2 - Q(x)^2 - sigma^2 R(x)> where S_t^2 = R(A).
inline IdealicResult idealic_map(const SlicePoint& pt) {
  const LieType& T = pt.type;
  int m = T.dim();
  QMat A = pt.A(), B = pt.B();
  MPoly y = MPoly::var(yid());
  auto cp = charpoly(A);
  bool three = T.family == LieFamily::D && pt.tau.is_zero();
  if (!three) {
    auto q = as_polynomial_in(B, A, m);
    if (!q) throw std::logic_error("idealic_map: B is not a polynomial in A");
    return {Ideal({x_poly(cp), -y + x_poly(*q)}, m), "[" + std::to_string(m) + "]", false};
  }
  int n = T.rank;
  GaussRat top = 2 * n - 2 < static_cast<int>(pt.t.size()) ? pt.t[static_cast<size_t>(2 * n - 2)] : GaussRat(0);
  QMat St = dn_S_t(n, top);
  if (!(A * St).is_zero()) throw std::logic_error("idealic_map: A S_t does not vanish");
  QMat Q = B - pt.sigma * St;
  auto q = as_polynomial_in(Q, A, m - 1);
  auto r = as_polynomial_in(St * St, A, m - 1);
  if (!q || !r) throw std::logic_error("idealic_map: polynomial part not found");
  std::vector<GaussRat> mp(cp.begin() + 1, cp.end());
  MPoly minpoly = x_poly(mp), x = MPoly::var(xid());
  MPoly Qx = x_poly(*q), Rx = x_poly(*r);
  MPoly g2 = rem_monic(x * Qx, minpoly, xid()), g3 = rem_monic(Qx * Qx + MPoly(pt.sigma * pt.sigma) * Rx, minpoly, xid());
  return {Ideal({minpoly, x * y - g2, y * y - g3}, m), "[" + std::to_string(m - 1) + ",1]", pt.sigma.is_zero()};
}

// Symbolic zero-fiber ideal of type D: <x^(2n-1), xy - sum mu_2k x^2k, y^2 - sum nu_2k x^2k>
// with nu_2k = sum_i mu_2i mu_(2k+2-2i) and top coefficient s2 * sigma^2 + sum ...
inline Ideal dn_zero_fiber_ideal(int n, const std::vector<MPoly>& mu, const MPoly& sigma, const MPoly& s2) {
  auto m = [&](int k) { return k < static_cast<int>(mu.size()) ? mu[static_cast<size_t>(k)] : MPoly(); };
  MPoly x = MPoly::var(xid()), y = MPoly::var(yid());
  MPoly xy, yy;
  for (int k = 1; k <= n - 1; ++k) {
    xy += m(2 * k) * x.pow(static_cast<unsigned>(2 * k));
    MPoly nu;
    for (int i = 1; i <= k && k + 1 - i <= n - 1; ++i) nu += m(2 * i) * m(2 * k + 2 - 2 * i);
    if (k == n - 1) nu += s2 * sigma * sigma;
    yy += nu * x.pow(static_cast<unsigned>(2 * k));
  }
  return Ideal({x.pow(static_cast<unsigned>(2 * n - 1)), x * y - xy, y * y - yy}, 2 * n);
}

// g(-x, -y) lies in the ideal for every generator g.
inline bool minus_id_invariant(const Ideal& I) {
  auto q = quotient_basis(I);
  std::map<int, MPoly> flip{{xid(), -MPoly::var(xid())}, {yid(), -MPoly::var(yid())}};
  for (auto& g : I.generators())
    if (!q.contains(g.subs(flip))) return false;
  return true;
}

struct DnRelationReport {
  int n = 0;
  bool S_in_algebra = false, fS_eq_Sf = false, fS_zero = false;
  bool S2_printed = false;      // S^2 = 2 f^(2n-2)
  int S2_factor = 0;            // c with S^2 = c f^(2n-2), 0 if none
  bool xy_relation = false;     // f B = sum mu_2k f^2k
  bool nu_lower = false;        // nu_2k for k < n-1
  bool nu_top_printed = false;  // nu_(2n-2) = 2 sigma^2 + sum
  bool nu_top_with_factor = false;

  nlohmann::json to_json() const {
    return {{"n", n},
            {"S_in_algebra", S_in_algebra},
            {"fS_eq_Sf", fS_eq_Sf},
            {"fS_zero", fS_zero},
            {"S2_equals_2f^(2n-2)", S2_printed},
            {"S2_factor", S2_factor},
            {"xy_relation", xy_relation},
            {"nu_lower", nu_lower},
            {"nu_top_printed", nu_top_printed},
            {"nu_top_with_factor", nu_top_with_factor}};
  }
};

// Exact checks of the type D zero-fiber relations with symbolic mu and sigma.
inline DnRelationReport dn_relations(int n) {
  LieType T{LieFamily::D, n};
  DnRelationReport r;
  r.n = n;
  auto f = principal_nilpotent<GaussRat>(T);
  auto S = dn_S<GaussRat>(n);
  r.S_in_algebra = in_algebra(S, T);
  r.fS_eq_Sf = f * S == S * f;
  r.fS_zero = (f * S).is_zero();
  QMat top = f.pow(static_cast<unsigned>(2 * n - 2));
  r.S2_printed = S * S == GaussRat(2) * top;
  for (int c : {1, -1, 2, -2})
    if (S * S == GaussRat(c) * top) r.S2_factor = c;

  auto F = to_pmat(f), Sp = to_pmat(S);
  std::vector<MPoly> mu(static_cast<size_t>(2 * n - 1));
  for (int k = 1; k <= n - 1; ++k) mu[static_cast<size_t>(2 * k)] = MPoly::var("mu" + std::to_string(2 * k));
  MPoly sigma = MPoly::var("sigma");
  PMat B(2 * n, 2 * n), pw = F;
  for (int k = 1; k <= n - 1; ++k) {
    B = B + mu[static_cast<size_t>(2 * k)] * pw;
    pw = pw * F * F;
  }
  B = B + sigma * Sp;
  PMat xy(2 * n, 2 * n), lower(2 * n, 2 * n);
  for (int k = 1; k <= n - 1; ++k) xy = xy + mu[static_cast<size_t>(2 * k)] * F.pow(static_cast<unsigned>(2 * k));
  r.xy_relation = F * B == xy;
  PMat B2 = B * B;
  MPoly sum_top;
  for (int k = 1; k <= n - 1; ++k) {
    MPoly nu;
    for (int i = 1; i <= k; ++i) nu += mu[static_cast<size_t>(2 * i)] * mu[static_cast<size_t>(2 * k + 2 - 2 * i)];
    if (k < n - 1) lower = lower + nu * F.pow(static_cast<unsigned>(2 * k));
    else sum_top = nu;
  }
  PMat Ftop = F.pow(static_cast<unsigned>(2 * n - 2));
  // The lower identities hold iff B^2 minus the lower part is a scalar multiple of f^(2n-2).
  PMat rest = B2 - lower;
  int ti = 0, tj = 0;
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j)
      if (!Ftop(i, j).is_zero()) ti = i, tj = j;
  MPoly coef = rest(ti, tj) * MPoly(GaussRat(1) / Ftop(ti, tj).constant_term());
  r.nu_lower = rest == coef * Ftop;
  r.nu_top_printed = r.nu_lower && coef == MPoly(2) * sigma * sigma + sum_top;
  r.nu_top_with_factor = r.nu_lower && r.S2_factor != 0 && coef == MPoly(r.S2_factor) * sigma * sigma + sum_top;
  return r;
}

}  // namespace hcs
