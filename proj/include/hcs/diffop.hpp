#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diffpois.hpp"
#include "linalg.hpp"
#include "mpoly.hpp"

namespace hcs {

// Differential operator sum c * nabla^a * nablabar^b with coefficients on the left.
// nabla and nablabar act on coefficients by d and db and commute with each other.
class DOp {
 public:
  using Key = std::pair<int, int>;

  DOp() = default;
  DOp(const MPoly& c) { add(0, 0, c); }
  static DOp nabla(int a = 1) { return term(MPoly(1), a, 0); }
  static DOp nablabar(int b = 1) { return term(MPoly(1), 0, b); }
  static DOp term(const MPoly& c, int a, int b) {
    DOp r;
    r.add(a, b, c);
    return r;
  }

  void add(int a, int b, const MPoly& c) {
    if (c.is_zero()) return;
    auto& slot = t_[{a, b}];
    slot += c;
    if (slot.is_zero()) t_.erase({a, b});
  }
  const std::map<Key, MPoly>& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  MPoly coeff(int a, int b = 0) const {
    auto it = t_.find({a, b});
    return it == t_.end() ? MPoly() : it->second;
  }
  int nabla_degree() const {
    int d = -1;
    for (auto& [k, c] : t_) d = std::max(d, k.first);
    return d;
  }
  bool has_nablabar() const {
    for (auto& [k, c] : t_)
      if (k.second > 0) return true;
    return false;
  }

  DOp& operator+=(const DOp& o) {
    for (auto& [k, c] : o.t_) add(k.first, k.second, c);
    return *this;
  }
  DOp& operator-=(const DOp& o) {
    for (auto& [k, c] : o.t_) add(k.first, k.second, -c);
    return *this;
  }
  friend DOp operator+(DOp a, const DOp& b) { return a += b; }
  friend DOp operator-(DOp a, const DOp& b) { return a -= b; }
  friend DOp operator-(const DOp& a) { return DOp() - a; }
  friend bool operator==(const DOp& a, const DOp& b) { return a.t_ == b.t_; }
  friend bool operator!=(const DOp& a, const DOp& b) { return !(a == b); }

  // Left multiplication by a coefficient.
  friend DOp operator*(const MPoly& c, const DOp& f) {
    DOp r;
    for (auto& [k, g] : f.t_) r.add(k.first, k.second, c * g);
    return r;
  }

  // nabla^a nablabar^b o c in normal form (Leibniz).
  static DOp push(int a, int b, const MPoly& c) {
    DOp r;
    MPoly ci = c;
    for (int i = 0; i <= a; ++i) {
      MPoly cij = ci;
      for (int j = 0; j <= b; ++j) {
        mpz_class w = binomial(static_cast<unsigned>(a), static_cast<unsigned>(i)) * binomial(static_cast<unsigned>(b), static_cast<unsigned>(j));
        r.add(a - i, b - j, MPoly(GaussRat(mpq_class(w))) * cij);
        if (j < b) cij = cij.db();
      }
      if (i < a) ci = ci.d();
    }
    return r;
  }

  friend DOp operator*(const DOp& f, const DOp& g) {
    DOp r;
    for (auto& [kf, cf] : f.t_)
      for (auto& [kg, cg] : g.t_)
        for (auto& [k, c] : push(kf.first, kf.second, cg).t_) r.add(k.first + kg.first, k.second + kg.second, cf * c);
    return r;
  }

  DOp map_coeffs(const std::function<MPoly(const MPoly&)>& f) const {
    DOp r;
    for (auto& [k, c] : t_) r.add(k.first, k.second, f(c));
    return r;
  }

  // Text form with right-normal powers, e.g. "(mu2)*N^1 + (d(mu2))".
  std::string to_string() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto it = t_.rbegin(); it != t_.rend(); ++it) {
      if (!first) os << " + ";
      first = false;
      os << "(" << it->second.to_string() << ")";
      if (it->first.first) os << "*N^" << it->first.first;
      if (it->first.second) os << "*Nb^" << it->first.second;
    }
    return os.str();
  }

 private:
  std::map<Key, MPoly> t_;
};

inline std::ostream& operator<<(std::ostream& os, const DOp& f) { return os << f.to_string(); }

inline DOp compose(const DOp& f, const DOp& g) { return f * g; }
inline DOp commutator(const DOp& f, const DOp& g) { return f * g - g * f; }

// P = sum t_k nabla^(n-k), k = 1..n (entry 1 may be zero).
inline DOp op_spectral(const std::vector<MPoly>& that, int n) {
  DOp r;
  for (int k = 1; k <= n && k < static_cast<int>(that.size()); ++k) r.add(n - k, 0, that[static_cast<size_t>(k)]);
  return r;
}

// Q = sum mu_k nabla^(k-1), k = 1..n.
inline DOp op_beltrami(const std::vector<MPoly>& muhat) {
  DOp r;
  for (size_t k = 1; k < muhat.size(); ++k) r.add(static_cast<int>(k) - 1, 0, muhat[k]);
  return r;
}

enum class ReduceOrder { BarFirst, NablaFirst };

// Normal form modulo the left ideal <nabla^n - P, -nablabar + Q>: each term
// c nabla^a nablabar^b is rewritten by nablabar -> Q or nabla^n -> P acting
// from the right. The two orders agree exactly when the ideal data is flat.
inline DOp reduce_mod_left_ideal(const DOp& F, int n, const DOp& P, const DOp& Q,
                                 ReduceOrder order = ReduceOrder::BarFirst, int max_steps = 200000) {
  if (P.has_nablabar() || Q.has_nablabar() || P.nabla_degree() >= n || Q.nabla_degree() >= n)
    throw std::invalid_argument("reduce_mod_left_ideal: P and Q must be nabla-polynomials of degree < n");
  DOp todo = F, done;
  for (int step = 0; !todo.is_zero(); ++step) {
    if (step > max_steps) throw std::logic_error("reduce_mod_left_ideal: step limit exceeded");
    auto it = std::prev(todo.terms().end());
    auto [a, b] = it->first;
    MPoly c = it->second;
    todo.add(a, b, -c);
    bool bar = b > 0 && (order == ReduceOrder::BarFirst || a < n);
    if (bar) todo += c * (DOp::term(MPoly(1), a, b - 1) * Q);
    else if (a >= n) todo += c * (DOp::term(MPoly(1), a - n, b) * P);
    else done.add(a, b, c);
  }
  return done;
}

inline DOp reduce_mod_left_ideal(const DOp& F, int n, const std::vector<MPoly>& that, const std::vector<MPoly>& muhat,
                                 ReduceOrder order = ReduceOrder::BarFirst) {
  return reduce_mod_left_ideal(F, n, op_spectral(that, n), op_beltrami(muhat), order);
}

// Coefficients of F in the nabla-power basis 1..nabla^(n-1); F must be free of nablabar.
inline std::vector<MPoly> nabla_coeffs(const DOp& F, int n) {
  if (F.has_nablabar() || F.nabla_degree() >= n) throw std::invalid_argument("nabla_coeffs: operator not reduced");
  std::vector<MPoly> r(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) r[static_cast<size_t>(j)] = F.coeff(j);
  return r;
}

// Trace of the second connection matrix with mu_1 = 0; the traceless
// first coefficient is minus this over n.
inline MPoly second_matrix_trace(int n, const std::vector<MPoly>& that, std::vector<MPoly> muhat) {
  muhat.resize(static_cast<size_t>(n + 1));
  muhat[1] = MPoly();
  DOp P = op_spectral(that, n), Q = op_beltrami(muhat);
  MPoly tr;
  for (int i = 0; i < n; ++i) tr += reduce_mod_left_ideal(DOp::nabla(i) * Q, n, P, DOp()).coeff(i);
  return tr;
}

inline MPoly traceless_mu1(int n, const std::vector<MPoly>& that, const std::vector<MPoly>& muhat) {
  return MPoly(GaussRat::frac(-1, n)) * second_matrix_trace(n, that, muhat);
}

// muhat with entry 1 replaced by the traceless value.
inline std::vector<MPoly> with_traceless_mu1(int n, const std::vector<MPoly>& that, std::vector<MPoly> muhat) {
  muhat.resize(static_cast<size_t>(n + 1));
  muhat[1] = traceless_mu1(n, that, muhat);
  return muhat;
}

struct ConnectionMatrices {
  Mat<MPoly> A1, A2;
};

// Matrices of nabla and nablabar in the frame (s, nabla s, ..., nabla^(n-1) s);
// column i of A2 is nabla^i Q reduced by nabla^n -> P.
inline ConnectionMatrices connection_matrices(int n, const std::vector<MPoly>& that, const std::vector<MPoly>& muhat) {
  auto mu = with_traceless_mu1(n, that, muhat);
  DOp P = op_spectral(that, n), Q = op_beltrami(mu);
  ConnectionMatrices m{Mat<MPoly>(n, n), Mat<MPoly>(n, n)};
  for (int i = 0; i + 1 < n; ++i) m.A1(i + 1, i) = MPoly(1);
  for (int k = 1; k <= n && k < static_cast<int>(that.size()); ++k) m.A1(n - k, n - 1) = that[static_cast<size_t>(k)];
  for (int i = 0; i < n; ++i) {
    auto col = nabla_coeffs(reduce_mod_left_ideal(DOp::nabla(i) * Q, n, P, DOp()), n);
    for (int j = 0; j < n; ++j) m.A2(j, i) = col[static_cast<size_t>(j)];
  }
  return m;
}

// F = d A2 - db A1 + [A1, A2].
inline Mat<MPoly> curvature_matrix(const ConnectionMatrices& m) {
  auto dA2 = m.A2.map([](const MPoly& c) { return c.d(); });
  auto dbA1 = m.A1.map([](const MPoly& c) { return c.db(); });
  return dA2 - dbA1 + m.A1 * m.A2 - m.A2 * m.A1;
}

// xi_2..xi_n with [nabla^n, nablabar] s = sum xi_k nabla^(n-k) s. Evaluating
// nabla^n nablabar s with nablabar eliminated first and with nabla^n eliminated
// first gives the two sides of the commutator.
inline std::vector<MPoly> parabolic_curvature(int n, const std::vector<MPoly>& that, const std::vector<MPoly>& muhat) {
  auto mu = with_traceless_mu1(n, that, muhat);
  DOp P = op_spectral(that, n), Q = op_beltrami(mu);
  DOp X = DOp::term(MPoly(1), n, 1);
  DOp F = reduce_mod_left_ideal(X, n, P, Q, ReduceOrder::BarFirst) - reduce_mod_left_ideal(X, n, P, Q, ReduceOrder::NablaFirst);
  std::vector<MPoly> xi(static_cast<size_t>(n + 1));
  for (int k = 1; k <= n; ++k) xi[static_cast<size_t>(k)] = F.coeff(n - k);
  if (!xi[1].is_zero()) throw std::logic_error("parabolic_curvature: nonzero nabla^(n-1) component");
  return xi;
}

struct GaugeVariation {
  std::vector<MPoly> dt, dmu;  // entries 1..n
};

// Variations of (t, mu) under H = v_1 + sum v_k nabla^(k-1), v_1 traceless:
// dP = [H, -nabla^n + P] mod I and dQ = [H, -nablabar + Q] mod I.
inline GaugeVariation gauge_vary(int n, const std::vector<MPoly>& that, const std::vector<MPoly>& muhat,
                                 const std::vector<MPoly>& vhat) {
  auto mu = with_traceless_mu1(n, that, muhat);
  auto v = with_traceless_mu1(n, that, vhat);
  DOp P = op_spectral(that, n), Q = op_beltrami(mu), H = op_beltrami(v);
  DOp dP = reduce_mod_left_ideal(commutator(H, P - DOp::nabla(n)), n, P, Q);
  DOp dQ = reduce_mod_left_ideal(commutator(H, Q - DOp::nablabar()), n, P, Q);
  GaugeVariation g{std::vector<MPoly>(static_cast<size_t>(n + 1)), std::vector<MPoly>(static_cast<size_t>(n + 1))};
  for (int k = 1; k <= n; ++k) {
    g.dt[static_cast<size_t>(k)] = dP.coeff(n - k);
    g.dmu[static_cast<size_t>(k)] = dQ.coeff(k - 1);
  }
  return g;
}

// Total base-derivative order of a monomial.
inline int derivative_weight(const Mono& m) {
  auto& reg = Registry::get();
  int w = 0;
  for (auto& [v, e] : m) {
    auto info = reg.info(v);
    w += e * (info.d + info.db);
  }
  return w;
}

// Keeps monomials of derivative weight < order ("mod d^order").
inline MPoly mod_derivative_order(const MPoly& f, int order) {
  return f.filter([order](const Mono& m) { return derivative_weight(m) < order; });
}

// Leading semiclassical term of [F_h, G_h], where each nabla and nablabar carries
// a factor h: the part of order h^(a+b+1) in front of nabla^a nablabar^b, with
// nabla -> p and nablabar -> pb.
inline MPoly semiclassical_commutator(const DOp& F, const DOp& G) {
  MPoly r;
  int p = pid(), pb = pbid();
  auto lead = [&](const DOp& X, const DOp& Y, int sign) {
    for (auto& [kx, cx] : X.terms())
      for (auto& [ky, cy] : Y.terms()) {
        int a = kx.first + ky.first, b = kx.second + ky.second;
        DOp pushed = DOp::push(kx.first, kx.second, cy);
        for (auto& [k, c] : pushed.terms())
          if (k.first + k.second + 1 == kx.first + kx.second)
            r += MPoly(sign) * cx * c * MPoly::var(p, a - (kx.first - k.first)) * MPoly::var(pb, b - (kx.second - k.second));
      }
  };
  lead(F, G, 1);
  lead(G, F, -1);
  return r;
}

// Principal symbol: nabla -> p, nablabar -> pb.
inline MPoly symbol_of(const DOp& F) {
  MPoly r;
  for (auto& [k, c] : F.terms()) r += c * MPoly::var(pid(), k.first) * MPoly::var(pbid(), k.second);
  return r;
}

}  // namespace hcs
