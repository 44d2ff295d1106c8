#pragma once

#include <Eigen/Dense>

#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "mpoly.hpp"
#include "roots.hpp"

namespace hcs {

struct NotFiniteCodimension : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonGenericConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WrongChart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int xid() { return var_id("x"); }
inline int yid() { return var_id("y"); }

// Exponent pair (i, j) standing for x^i y^j.
using XY = std::pair<int, int>;

inline MPoly xy_mono(XY e) { return MPoly::var(xid(), e.first) * MPoly::var(yid(), e.second); }

// Remainder of p modulo a polynomial monic in var.
inline MPoly rem_monic(const MPoly& p, const MPoly& f, int var) {
  auto fc = f.as_univariate(var);
  int n = static_cast<int>(fc.size()) - 1;
  auto pc = p.as_univariate(var);
  for (int k = static_cast<int>(pc.size()) - 1; k >= n; --k) {
    MPoly lead = pc[static_cast<size_t>(k)];
    if (lead.is_zero()) continue;
    for (int j = 0; j <= n; ++j) pc[static_cast<size_t>(k - n + j)] -= lead * fc[static_cast<size_t>(j)];
  }
  pc.resize(static_cast<size_t>(std::min<int>(n, static_cast<int>(pc.size()))));
  return MPoly::from_univariate(pc, var);
}

template <class R>
struct CommutingPair {
  Mat<R> A, B;
};

// Quotient C[x,y]/I presented by a monomial basis and multiplication matrices.
struct Quotient {
  std::vector<XY> basis;
  std::vector<MPoly> relations;
  PMat Mx, My;
  bool structural = false;

  int dim() const { return static_cast<int>(basis.size()); }

  // Coordinates of p modulo I in the basis: p(Mx, My) applied to the class of 1.
  std::vector<MPoly> nf(const MPoly& p) const {
    int n = dim();
    std::vector<MPoly> one(static_cast<size_t>(n), MPoly(0));
    for (int k = 0; k < n; ++k)
      if (basis[static_cast<size_t>(k)] == XY{0, 0}) one[static_cast<size_t>(k)] = MPoly(1);
    std::vector<MPoly> out(static_cast<size_t>(n), MPoly(0));
    auto pcs = p.as_univariate(yid());
    std::vector<MPoly> ypow = one;
    for (size_t j = 0; j < pcs.size(); ++j) {
      if (j > 0) ypow = My * ypow;
      auto xc = pcs[j].as_univariate(xid());
      std::vector<MPoly> v = ypow;
      for (size_t i = 0; i < xc.size(); ++i) {
        if (i > 0) v = Mx * v;
        if (xc[i].is_zero()) continue;
        for (int k = 0; k < n; ++k) out[static_cast<size_t>(k)] += xc[i] * v[static_cast<size_t>(k)];
      }
    }
    return out;
  }
  bool contains(const MPoly& p) const {
    for (auto& c : nf(p))
      if (!c.is_zero()) return false;
    return true;
  }
};

class Ideal {
 public:
  Ideal() = default;
  Ideal(std::vector<MPoly> gens, int codim) : gens_(std::move(gens)), n_(codim) {}

  // Big-cell ideal <x^n - sum t_k x^(n-k), -y + sum mu_k x^(k-1)>.
  static Ideal big_cell(const std::vector<MPoly>& t, const std::vector<MPoly>& mu) {
    int n = static_cast<int>(t.size());
    MPoly f = MPoly::var(xid(), n), q;
    for (int k = 1; k <= n; ++k) f -= t[static_cast<size_t>(k - 1)] * MPoly::var(xid(), n - k);
    for (int k = 1; k <= n; ++k) q += mu[static_cast<size_t>(k - 1)] * MPoly::var(xid(), k - 1);
    return Ideal({f, -MPoly::var(yid()) + q}, n);
  }

  const std::vector<MPoly>& generators() const { return gens_; }
  int codim() const { return n_; }

  nlohmann::json to_json() const {
    nlohmann::json g = nlohmann::json::array();
    for (auto& p : gens_) g.push_back(p.to_string());
    return {{"generators", g}, {"codim", n_}};
  }
  static Ideal from_json(const nlohmann::json& j) {
    std::vector<MPoly> g;
    for (auto& s : j.at("generators")) g.push_back(MPoly::parse(s.get<std::string>()));
    return Ideal(g, j.at("codim").get<int>());
  }

 private:
  std::vector<MPoly> gens_;
  int n_ = 0;
};

namespace detail {

inline bool coeffs_free_of_xy(const MPoly& p) {
  for (auto& [m, c] : p.terms())
    for (auto& [v, e] : m)
      if (v != xid() && v != yid()) return false;
  return true;
}

// Structural path: <f(x) monic of degree n, c*y + R(x)>.
inline std::optional<Quotient> structural_quotient(const Ideal& I) {
  auto& g = I.generators();
  if (g.size() != 2) return std::nullopt;
  int n = I.codim();
  for (int pick = 0; pick < 2; ++pick) {
    const MPoly& f = g[static_cast<size_t>(pick)];
    const MPoly& h = g[static_cast<size_t>(1 - pick)];
    if (f.degree(yid()) != 0 || f.degree(xid()) != n) continue;
    MPoly lf = f.coeff(xid(), n);
    if (!lf.is_constant()) continue;
    if (h.degree(yid()) != 1) continue;
    MPoly cy = h.coeff(yid(), 1);
    if (!cy.is_constant()) continue;
    GaussRat ic = GaussRat(1) / cy.constant_term();
    MPoly fm = f * (GaussRat(1) / lf.constant_term());
    MPoly Q = rem_monic(-(h.coeff(yid(), 0)) * ic, fm, xid());
    Quotient q;
    q.structural = true;
    for (int i = 0; i < n; ++i) q.basis.push_back({i, 0});
    q.Mx = PMat(n, n);
    q.My = PMat(n, n);
    for (int i = 0; i < n; ++i) {
      auto cx = rem_monic(MPoly::var(xid(), i + 1), fm, xid()).as_univariate(xid());
      auto cyv = rem_monic(MPoly::var(xid(), i) * Q, fm, xid()).as_univariate(xid());
      for (int k = 0; k < n; ++k) {
        if (k < static_cast<int>(cx.size())) q.Mx(k, i) = cx[static_cast<size_t>(k)];
        if (k < static_cast<int>(cyv.size())) q.My(k, i) = cyv[static_cast<size_t>(k)];
      }
    }
    q.relations.push_back(fm);
    q.relations.push_back(-MPoly::var(yid()) + Q);
    return q;
  }
  return std::nullopt;
}

// Running-columns scan over the grid [0,B]^2: for each y-power j, x-powers
// are tried in order until the first dependent monomial, whose relation is kept.
// indep(e, selected) returns nullopt when independent, else coordinates over selected.
template <class Dep>
void column_scan(int bound, Dep dep, std::vector<XY>& basis, std::vector<std::pair<XY, std::vector<GaussRat>>>& rel) {
  for (int j = 0; j <= bound; ++j) {
    for (int i = 0; i <= bound; ++i) {
      auto c = dep(XY{i, j}, basis);
      if (!c) {
        basis.push_back({i, j});
        continue;
      }
      rel.emplace_back(XY{i, j}, *c);
      break;
    }
  }
}

inline MPoly relation_poly(XY e, const std::vector<XY>& basis, const std::vector<GaussRat>& c) {
  MPoly r = xy_mono(e);
  for (size_t k = 0; k < c.size(); ++k) r -= c[k] * xy_mono(basis[k]);
  return r;
}

// Exact path via truncated Macaulay spaces; needs rational coefficients.
inline Quotient macaulay_quotient(const Ideal& I, int bound) {
  int n = I.codim();
  int maxdeg = 0;
  for (auto& g : I.generators()) {
    if (!coeffs_free_of_xy(g)) throw std::invalid_argument("quotient: symbolic ideal not in big-cell form");
    maxdeg = std::max(maxdeg, g.total_degree());
  }
  int x = xid(), y = yid();
  for (int D = 2 * bound + maxdeg; D <= 4 * bound + 2 * maxdeg + 4; D += 2) {
    std::map<XY, int> col;
    std::vector<XY> monos;
    for (int d = 0; d <= D; ++d)
      for (int i = 0; i <= d; ++i) {
        col[{i, d - i}] = static_cast<int>(monos.size());
        monos.push_back({i, d - i});
      }
    int nc = static_cast<int>(monos.size());
    std::vector<std::vector<GaussRat>> rows;
    for (auto& g : I.generators()) {
      int dg = g.total_degree();
      for (int d = 0; d + dg <= D; ++d)
        for (int i = 0; i <= d; ++i) {
          std::vector<GaussRat> row(static_cast<size_t>(nc), GaussRat(0));
          for (auto& [m, c] : g.terms())
            row[static_cast<size_t>(col[{mono_exp(m, x) + i, mono_exp(m, y) + d - i}])] += c;
          rows.push_back(std::move(row));
        }
    }
    QMat V(static_cast<int>(rows.size()), nc);
    for (int r = 0; r < V.rows(); ++r)
      for (int c = 0; c < nc; ++c) V(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
    auto piv = rref(V);
    auto reduce = [&](std::vector<GaussRat> w) {
      for (size_t r = 0; r < piv.size(); ++r) {
        GaussRat f = w[static_cast<size_t>(piv[r])];
        if (f.is_zero()) continue;
        for (int c = 0; c < nc; ++c)
          if (!V(static_cast<int>(r), c).is_zero()) w[static_cast<size_t>(c)] -= f * V(static_cast<int>(r), c);
      }
      return w;
    };
    auto unitv = [&](XY e) {
      std::vector<GaussRat> w(static_cast<size_t>(nc), GaussRat(0));
      w[static_cast<size_t>(col.at(e))] = GaussRat(1);
      return w;
    };
    // Reduced images of selected monomials, kept to solve for coordinates.
    auto dep = [&](XY e, const std::vector<XY>& sel) -> std::optional<std::vector<GaussRat>> {
      if (e.first + e.second > D) throw std::logic_error("quotient: monomial beyond truncation degree");
      auto target = reduce(unitv(e));
      int k = static_cast<int>(sel.size());
      QMat S(nc, k + 1);
      for (int s = 0; s < k; ++s) {
        auto rs = reduce(unitv(sel[static_cast<size_t>(s)]));
        for (int c = 0; c < nc; ++c) S(c, s) = rs[static_cast<size_t>(c)];
      }
      for (int c = 0; c < nc; ++c) S(c, k) = target[static_cast<size_t>(c)];
      auto p = rref(S);
      if (!p.empty() && p.back() == k) return std::nullopt;
      std::vector<GaussRat> coef(static_cast<size_t>(k), GaussRat(0));
      for (size_t r = 0; r < p.size(); ++r) coef[static_cast<size_t>(p[r])] = S(static_cast<int>(r), k);
      return coef;
    };
    std::vector<XY> basis;
    std::vector<std::pair<XY, std::vector<GaussRat>>> rel;
    column_scan(bound, dep, basis, rel);
    if (static_cast<int>(basis.size()) < n)
      throw NotFiniteCodimension("quotient: codimension " + std::to_string(basis.size()) + " below declared " +
                                 std::to_string(n));
    if (static_cast<int>(basis.size()) > n) continue;
    Quotient q;
    q.basis = basis;
    for (auto& [e, c] : rel) q.relations.push_back(relation_poly(e, basis, c));
    q.Mx = PMat(n, n);
    q.My = PMat(n, n);
    for (int s = 0; s < n; ++s) {
      XY b = basis[static_cast<size_t>(s)];
      for (int which = 0; which < 2; ++which) {
        XY e = which == 0 ? XY{b.first + 1, b.second} : XY{b.first, b.second + 1};
        std::vector<GaussRat> c;
        auto it = std::find(basis.begin(), basis.end(), e);
        if (it != basis.end()) {
          c.assign(static_cast<size_t>(n), GaussRat(0));
          c[static_cast<size_t>(it - basis.begin())] = GaussRat(1);
        } else {
          auto d = dep(e, basis);
          if (!d) throw std::logic_error("quotient: basis not closed under multiplication");
          c = *d;
        }
        PMat& M = which == 0 ? q.Mx : q.My;
        for (int k = 0; k < n; ++k) M(k, s) = MPoly(c[static_cast<size_t>(k)]);
      }
    }
    return q;
  }
  throw NotFiniteCodimension("quotient: codimension exceeds the search bound");
}

}  // namespace detail

inline Quotient quotient_basis(const Ideal& I, int bound = -1) {
  if (I.codim() < 1) throw std::invalid_argument("quotient: codimension must be positive");
  for (auto& g : I.generators())
    if (g.is_zero()) throw std::invalid_argument("quotient: zero generator");
  if (bound < 0) bound = I.codim() + 1;
  if (auto q = detail::structural_quotient(I)) return *q;
  return detail::macaulay_quotient(I, bound);
}

inline CommutingPair<MPoly> mult_ops(const Ideal& I) {
  auto q = quotient_basis(I);
  return {q.Mx, q.My};
}

// Constant-coefficient matrix from a polynomial matrix.
inline QMat to_qmat(const PMat& m) {
  return m.map([](const MPoly& p) {
    if (!p.is_constant()) throw std::invalid_argument("to_qmat: symbolic entry");
    return p.constant_term();
  });
}
inline PMat to_pmat(const QMat& m) { return m.map([](const GaussRat& g) { return MPoly(g); }); }

inline Ideal from_points(const std::vector<std::pair<GaussRat, GaussRat>>& pts) {
  int n = static_cast<int>(pts.size());
  if (n == 0) throw std::invalid_argument("from_points: empty configuration");
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (pts[static_cast<size_t>(a)].first == pts[static_cast<size_t>(b)].first)
        throw NonGenericConfiguration("from_points: repeated x-coordinate");
  MPoly X = MPoly::var(xid());
  MPoly f(1), Q;
  for (auto& [xa, ya] : pts) f = f * (X - MPoly(xa));
  for (int a = 0; a < n; ++a) {
    MPoly L(1);
    GaussRat den(1);
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      L = L * (X - MPoly(pts[static_cast<size_t>(b)].first));
      den *= pts[static_cast<size_t>(a)].first - pts[static_cast<size_t>(b)].first;
    }
    Q += L * (pts[static_cast<size_t>(a)].second / den);
  }
  return Ideal({f, -MPoly::var(yid()) + Q}, n);
}

// Annihilator ideal {P : P(A,B) = 0} by the running-columns scan on A^i B^j,
// returned with its quotient presentation.
inline std::pair<Ideal, Quotient> quotient_of_pair(const QMat& A, const QMat& B) {
  int n = A.rows();
  int bound = n + 1;
  auto flat = [&](const QMat& m) {
    std::vector<GaussRat> v(m.data().begin(), m.data().end());
    return v;
  };
  std::map<XY, QMat> cache;
  auto power = [&](XY e) -> const QMat& {
    auto it = cache.find(e);
    if (it != cache.end()) return it->second;
    return cache.emplace(e, A.pow(static_cast<unsigned>(e.first)) * B.pow(static_cast<unsigned>(e.second))).first->second;
  };
  auto dep = [&](XY e, const std::vector<XY>& sel) -> std::optional<std::vector<GaussRat>> {
    int k = static_cast<int>(sel.size());
    QMat S(n * n, k + 1);
    for (int s = 0; s < k; ++s) {
      auto v = flat(power(sel[static_cast<size_t>(s)]));
      for (int r = 0; r < n * n; ++r) S(r, s) = v[static_cast<size_t>(r)];
    }
    auto t = flat(power(e));
    for (int r = 0; r < n * n; ++r) S(r, k) = t[static_cast<size_t>(r)];
    auto p = rref(S);
    if (!p.empty() && p.back() == k) return std::nullopt;
    std::vector<GaussRat> coef(static_cast<size_t>(k), GaussRat(0));
    for (size_t r = 0; r < p.size(); ++r) coef[static_cast<size_t>(p[r])] = S(static_cast<int>(r), k);
    return coef;
  };
  std::vector<XY> basis;
  std::vector<std::pair<XY, std::vector<GaussRat>>> rel;
  detail::column_scan(bound, dep, basis, rel);
  std::vector<MPoly> gens;
  for (auto& [e, c] : rel) gens.push_back(detail::relation_poly(e, basis, c));
  int d = static_cast<int>(basis.size());
  Quotient q;
  q.basis = basis;
  q.relations = gens;
  q.Mx = PMat(d, d);
  q.My = PMat(d, d);
  for (int s = 0; s < d; ++s) {
    XY b = basis[static_cast<size_t>(s)];
    for (int which = 0; which < 2; ++which) {
      XY e = which == 0 ? XY{b.first + 1, b.second} : XY{b.first, b.second + 1};
      auto c = dep(e, basis);
      PMat& M = which == 0 ? q.Mx : q.My;
      if (!c) throw std::logic_error("quotient_of_pair: basis not closed");
      for (int k = 0; k < d; ++k) M(k, s) = MPoly((*c)[static_cast<size_t>(k)]);
    }
  }
  return {Ideal(gens, d), q};
}

inline Ideal ideal_of_pair(const QMat& A, const QMat& B) { return quotient_of_pair(A, B).first; }

// Dimension of the unital algebra generated by A and B.
inline int algebra_dim(const QMat& A, const QMat& B) { return ideal_of_pair(A, B).codim(); }

struct CyclicResult {
  bool cyclic = false;
  int algebra_dim = 0;
  int krylov_rank = 0;
  std::vector<GaussRat> vector;
  // Set when non-cyclicity is certified by the vanishing of the Krylov
  // determinant in an indeterminate vector.
  bool generic_det_zero = false;
};

inline int krylov_rank(const QMat& A, const QMat& B, const std::vector<GaussRat>& v) {
  int n = A.rows();
  QMat K(n, (n + 1) * (n + 1));
  int c = 0;
  std::vector<GaussRat> bj = v;
  for (int j = 0; j <= n; ++j) {
    std::vector<GaussRat> w = bj;
    for (int i = 0; i <= n; ++i) {
      for (int r = 0; r < n; ++r) K(r, c) = w[static_cast<size_t>(r)];
      ++c;
      w = A * w;
    }
    bj = B * bj;
  }
  return rank(K);
}

inline CyclicResult is_cyclic(const QMat& A, const QMat& B, uint64_t seed = 1) {
  int n = A.rows();
  CyclicResult res;
  auto [I, q] = quotient_of_pair(A, B);
  res.algebra_dim = I.codim();
  if (res.algebra_dim < n) return res;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(-50, 50);
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<GaussRat> v(static_cast<size_t>(n));
    for (auto& x : v) x = GaussRat(d(rng));
    res.krylov_rank = krylov_rank(A, B, v);
    if (res.krylov_rank == n) {
      res.cyclic = true;
      res.vector = v;
      return res;
    }
  }
  // Exact decision: with a basis a_1..a_n of C[A,B], det[a_k v] in symbolic v.
  PMat K(n, n);
  std::vector<MPoly> v;
  for (int r = 0; r < n; ++r) v.push_back(MPoly::var("cycv" + std::to_string(r + 1)));
  PMat Ap = to_pmat(A), Bp = to_pmat(B);
  for (int k = 0; k < n; ++k) {
    XY e = q.basis[static_cast<size_t>(k)];
    auto w = Ap.pow(static_cast<unsigned>(e.first)) * (Bp.pow(static_cast<unsigned>(e.second)) * v);
    for (int r = 0; r < n; ++r) K(r, k) = w[static_cast<size_t>(r)];
  }
  MPoly det = det_bareiss(K);
  res.generic_det_zero = det.is_zero();
  if (!res.generic_det_zero) {
    // A nonzero polynomial has a nonvanishing integer point in a small box.
    std::vector<int> ids;
    for (auto& p : v) ids.push_back(*p.variables().begin());
    for (int attempt = 0; attempt < 200; ++attempt) {
      std::map<int, GaussRat> vals;
      std::vector<GaussRat> vv;
      for (int id : ids) vv.push_back(vals[id] = GaussRat(d(rng)));
      if (!det.eval(vals).is_zero()) {
        res.cyclic = true;
        res.vector = vv;
        res.krylov_rank = n;
        return res;
      }
    }
  }
  return res;
}

// Joint spectrum of a numeric commuting pair.
inline std::vector<std::pair<cplx, cplx>> chow(const CMat& A, const CMat& B, uint64_t seed = 7) {
  using EM = Eigen::MatrixXcd;
  int n = A.rows();
  EM a(n, n), b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a(i, j) = A(i, j);
      b(i, j) = B(i, j);
    }
  double na = a.norm(), nb = b.norm();
  double comm = (a * b - b * a).norm();
  if (comm > 1e-12 * std::max(1.0, na * nb)) throw NumericFailure("chow: matrices do not commute", comm);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int attempt = 0; attempt < 5; ++attempt) {
    double al = u(rng), be = u(rng) * (attempt % 2 ? -1 : 1);
    EM C = al * a + be * b;
    Eigen::ComplexEigenSolver<EM> es(C);
    Eigen::VectorXcd ev = es.eigenvalues();
    double cn = C.norm();
    double tol = std::max(1e-6, 1e2 * std::pow(1e-16 * (1 + cn), 1.0 / n));
    // Cluster eigenvalues of the combination.
    std::vector<int> label(static_cast<size_t>(n), -1);
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < n; ++i) {
      if (label[static_cast<size_t>(i)] >= 0) continue;
      label[static_cast<size_t>(i)] = static_cast<int>(clusters.size());
      clusters.push_back({i});
      for (size_t q = 0; q < clusters.back().size(); ++q)
        for (int j = 0; j < n; ++j)
          if (label[static_cast<size_t>(j)] < 0 && std::abs(ev(clusters.back()[q]) - ev(j)) < tol) {
            label[static_cast<size_t>(j)] = label[static_cast<size_t>(i)];
            clusters.back().push_back(j);
          }
    }
    std::vector<std::pair<cplx, cplx>> out;
    bool ok = true;
    for (auto& cl : clusters) {
      int m = static_cast<int>(cl.size());
      cplx lam = 0;
      for (int i : cl) lam += ev(i);
      lam /= double(m);
      EM N = C - lam * EM::Identity(n, n);
      EM Np = EM::Identity(n, n);
      for (int k = 0; k < m; ++k) Np = Np * N;
      Eigen::JacobiSVD<EM> svd(Np, Eigen::ComputeFullV);
      EM U = svd.matrixV().rightCols(m);
      EM ar = U.adjoint() * a * U, br = U.adjoint() * b * U;
      cplx xa = ar.trace() / double(m), yb = br.trace() / double(m);
      // Invariance check: the restricted subspace must be A- and B-stable.
      double leak = (a * U - U * ar).norm() + (b * U - U * br).norm();
      if (leak > 1e-6 * (1 + na + nb)) ok = false;
      for (int k = 0; k < m; ++k) out.emplace_back(xa, yb);
    }
    if (ok && static_cast<int>(out.size()) == n) return out;
  }
  throw NumericFailure("chow: joint triangularization failed", 0.0);
}

// Young diagram as row lengths r_0 >= r_1 >= ...; box (i,j) is x^i y^j.
struct Young {
  std::vector<int> rows;
  std::vector<XY> boxes() const {
    std::vector<XY> b;
    for (int j = 0; j < static_cast<int>(rows.size()); ++j)
      for (int i = 0; i < rows[static_cast<size_t>(j)]; ++i) b.push_back({i, j});
    return b;
  }
  int row_len(int j) const { return j < static_cast<int>(rows.size()) ? rows[static_cast<size_t>(j)] : 0; }
  int col_height(int i) const {
    int h = 0;
    while (h < static_cast<int>(rows.size()) && rows[static_cast<size_t>(h)] > i) ++h;
    return h;
  }
};

struct HaimanCoord {
  XY box;
  MPoly b_row, b_col;
};

// Coefficients of the boundary relations of the chart attached to the diagram.
inline std::vector<HaimanCoord> haiman_coords(const Ideal& I, const Young& D) {
  auto q = quotient_basis(I);
  auto boxes = D.boxes();
  int n = q.dim();
  if (static_cast<int>(boxes.size()) != n) throw WrongChart("haiman_coords: diagram size differs from codimension");
  // Change of basis from the quotient basis to the diagram monomials.
  PMat T(n, n);
  for (int k = 0; k < n; ++k) {
    auto c = q.nf(xy_mono(boxes[static_cast<size_t>(k)]));
    for (int r = 0; r < n; ++r) T(r, k) = c[static_cast<size_t>(r)];
  }
  bool identity_change = T == PMat::identity(n);
  PMat Tinv;
  if (!identity_change) {
    try {
      Tinv = inverse_unit_pivot(T);
    } catch (const std::domain_error&) {
      throw WrongChart("haiman_coords: diagram monomials do not span the quotient");
    }
  }
  auto coords = [&](XY e) {
    auto c = q.nf(xy_mono(e));
    return identity_change ? c : Tinv * c;
  };
  auto index_of = [&](XY e) { return static_cast<size_t>(std::find(boxes.begin(), boxes.end(), e) - boxes.begin()); };
  std::vector<HaimanCoord> out;
  for (auto& s : boxes) {
    int i = s.first, j = s.second;
    int rj = D.row_len(j), ci = D.col_height(i);
    auto right = coords({rj, j});
    auto below = coords({i, ci});
    XY bottom{i, ci - 1}, rightmost{rj - 1, j};
    out.push_back({s, right[index_of(bottom)], below[index_of(rightmost)]});
  }
  return out;
}

// Symbolic or exact big-cell point.
struct BigCellPoint {
  int n = 0;
  std::vector<MPoly> t, mu;
  bool reduced = false;

  static BigCellPoint symbolic(int n, const std::string& tname = "t", const std::string& muname = "mu") {
    BigCellPoint p;
    p.n = n;
    for (int k = 1; k <= n; ++k) {
      p.t.push_back(MPoly::var(tname + std::to_string(k)));
      p.mu.push_back(MPoly::var(muname + std::to_string(k)));
    }
    return p;
  }
  Ideal ideal() const { return Ideal::big_cell(t, mu); }

  nlohmann::json to_json() const {
    nlohmann::json jt = nlohmann::json::array(), jm = nlohmann::json::array();
    for (auto& x : t) jt.push_back(x.to_string());
    for (auto& x : mu) jm.push_back(x.to_string());
    return {{"n", n}, {"t", jt}, {"mu", jm}, {"reduced", reduced}};
  }
  static BigCellPoint from_json(const nlohmann::json& j) {
    BigCellPoint p;
    p.n = j.at("n").get<int>();
    for (auto& s : j.at("t")) p.t.push_back(s.is_string() ? MPoly::parse(s.get<std::string>()) : MPoly(GaussRat(s.get<long>())));
    for (auto& s : j.at("mu")) p.mu.push_back(s.is_string() ? MPoly::parse(s.get<std::string>()) : MPoly(GaussRat(s.get<long>())));
    p.reduced = j.value("reduced", false);
    if (static_cast<int>(p.t.size()) != p.n || static_cast<int>(p.mu.size()) != p.n)
      throw std::invalid_argument("BigCellPoint: t and mu must have n entries");
    return p;
  }
};

// mu_1 of the reduced big cell: -sum_{k=2}^{n-1} (k/n) t_k mu_{k+1}.
template <class R>
R reduced_mu1(const std::vector<R>& t, const std::vector<R>& mu) {
  int n = static_cast<int>(t.size());
  R s(0);
  for (int k = 2; k <= n - 1; ++k) s += R(GaussRat::frac(-k, n)) * t[static_cast<size_t>(k - 1)] * mu[static_cast<size_t>(k)];
  return s;
}

inline BigCellPoint reduce_point(BigCellPoint p) {
  p.t[0] = MPoly(0);
  p.mu[0] = reduced_mu1(p.t, p.mu);
  p.reduced = true;
  return p;
}

// Multiplication matrices of the big cell: companion Mx, My = sum mu_k Mx^(k-1).
inline CommutingPair<MPoly> big_cell_ops(const std::vector<MPoly>& t, const std::vector<MPoly>& mu) {
  int n = static_cast<int>(t.size());
  PMat Mx(n, n);
  for (int i = 0; i + 1 < n; ++i) Mx(i + 1, i) = MPoly(1);
  for (int k = 1; k <= n; ++k) Mx(n - k, n - 1) = t[static_cast<size_t>(k - 1)];
  PMat My(n, n), pw = PMat::identity(n);
  for (int k = 1; k <= n; ++k) {
    My += mu[static_cast<size_t>(k - 1)] * pw;
    pw = pw * Mx;
  }
  return {Mx, My};
}

// omega(d_a, d_b) in the coordinates (t_1..t_n, mu_1..mu_n) for
// omega = tr dMx ^ dMy = sum_i dt_i ^ d alpha_{n,n+1-i}, alpha = last row of My.
// t_sign = -1 uses the opposite sign convention x^n + sum t_k x^(n-k).
inline PMat symplectic_matrix(int n, int t_sign = 1) {
  auto p = BigCellPoint::symbolic(n);
  std::vector<MPoly> ts = p.t;
  if (t_sign < 0)
    for (auto& v : ts) v = -v;
  auto ops = big_cell_ops(ts, p.mu);
  std::vector<int> coords;
  for (auto& v : p.t) coords.push_back(*v.variables().begin());
  for (auto& v : p.mu) coords.push_back(*v.variables().begin());
  PMat W(2 * n, 2 * n);
  for (int i = 1; i <= n; ++i) {
    const MPoly& ti = ts[static_cast<size_t>(i - 1)];
    const MPoly& al = ops.B(n - 1, n - i);
    for (int a = 0; a < 2 * n; ++a)
      for (int b = 0; b < 2 * n; ++b) {
        MPoly term = ti.diff(coords[static_cast<size_t>(a)]) * al.diff(coords[static_cast<size_t>(b)]) -
                     ti.diff(coords[static_cast<size_t>(b)]) * al.diff(coords[static_cast<size_t>(a)]);
        if (!term.is_zero()) W(a, b) += term;
      }
  }
  return W;
}

inline std::vector<int> big_cell_coord_ids(int n) {
  std::vector<int> ids;
  for (int k = 1; k <= n; ++k) ids.push_back(var_id("t" + std::to_string(k)));
  for (int k = 1; k <= n; ++k) ids.push_back(var_id("mu" + std::to_string(k)));
  return ids;
}

// Poisson bivector {f,g} = grad f^T P grad g with P = orientation * W^{-1}.
inline PMat poisson_matrix(int n, int t_sign = 1, int orientation = 1) {
  PMat P = inverse_unit_pivot(symplectic_matrix(n, t_sign));
  return orientation > 0 ? P : -P;
}

struct PoissonTableReport {
  int n = 0;
  int entries = 0;
  int mismatches = 0;
  std::vector<std::string> details;
};

// Compares the bivector with {t_i,t_j} = {mu_i,mu_j} = 0, {mu_i,t_j} = t_{j-i}
// (t_0 = 1, t_k = 0 for k < 0).
inline PoissonTableReport poisson_table_check(int n, int t_sign = 1, int orientation = 1) {
  PMat P = poisson_matrix(n, t_sign, orientation);
  PoissonTableReport r;
  r.n = n;
  auto tk = [&](int k) { return k == 0 ? MPoly(1) : k < 0 ? MPoly(0) : MPoly::var("t" + std::to_string(k)); };
  auto cmp = [&](const MPoly& got, const MPoly& want, const std::string& what) {
    ++r.entries;
    if (got != want) {
      ++r.mismatches;
      if (r.details.size() < 8) r.details.push_back(what + " = " + got.to_string() + ", expected " + want.to_string());
    }
  };
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      std::string si = std::to_string(i), sj = std::to_string(j);
      cmp(P(i - 1, j - 1), MPoly(0), "{t" + si + ",t" + sj + "}");
      cmp(P(n + i - 1, n + j - 1), MPoly(0), "{mu" + si + ",mu" + sj + "}");
      cmp(P(n + i - 1, j - 1), tk(j - i), "{mu" + si + ",t" + sj + "}");
    }
  return r;
}

// Sum over boxes of d b_row ^ d b_col on the single-row chart, as a matrix in
// the coordinates (t_1..t_n, mu_1..mu_n).
inline PMat haiman_form(int n) {
  auto p = BigCellPoint::symbolic(n);
  auto hc = haiman_coords(p.ideal(), Young{{n}});
  auto ids = big_cell_coord_ids(n);
  PMat W(2 * n, 2 * n);
  for (auto& h : hc)
    for (int a = 0; a < 2 * n; ++a)
      for (int b = 0; b < 2 * n; ++b) {
        MPoly term = h.b_row.diff(ids[static_cast<size_t>(a)]) * h.b_col.diff(ids[static_cast<size_t>(b)]) -
                     h.b_col.diff(ids[static_cast<size_t>(a)]) * h.b_row.diff(ids[static_cast<size_t>(b)]);
        if (!term.is_zero()) W(a, b) += term;
      }
  return W;
}

}  // namespace hcs
