#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "conjstruct.hpp"
#include "roots.hpp"

namespace hcs {

struct ChartBoundary : std::domain_error {
  using std::domain_error::domain_error;
};

// Element of GL2(R) in light-cone form: acts by x' = a x + conj(b) ybar on (x, ybar).
struct GL2Elem {
  cplx a{1}, b{0};

  static GL2Elem identity() { return {}; }
  // Real matrix [[A,B],[C,D]] acting on (X,Y) with z = X + iY.
  static GL2Elem from_real(double A, double B, double C, double D) {
    return {cplx(A + D, -(B - C)) / 2.0, cplx(A - D, -(B + C)) / 2.0};
  }
  double det() const { return std::norm(a) - std::norm(b); }
  // Product of the matrices [[a, conj b], [b, conj a]].
  friend GL2Elem operator*(const GL2Elem& g, const GL2Elem& h) {
    return {g.a * h.a + std::conj(g.b) * h.b, std::conj(g.a) * h.b + g.b * h.a};
  }
};

// Numeric cotangent point: body mu[2..n] and first-order t[2..n].
struct JetPoint {
  int n = 0;
  std::vector<cplx> mu, t;

  static JetPoint make(int n) {
    return {n, std::vector<cplx>(static_cast<size_t>(n + 1), 0.0), std::vector<cplx>(static_cast<size_t>(n + 1), 0.0)};
  }
  nlohmann::json to_json() const {
    auto arr = [](const std::vector<cplx>& v) {
      nlohmann::json a = nlohmann::json::array();
      for (size_t k = 2; k < v.size(); ++k) a.push_back({v[k].real(), v[k].imag()});
      return a;
    };
    return {{"n", n}, {"mu", arr(mu)}, {"t", arr(t)}, {"reduced", true}};
  }
  static JetPoint from_json(const nlohmann::json& j) {
    JetPoint p = make(j.at("n").get<int>());
    auto read = [&](const char* key, std::vector<cplx>& v) {
      const auto& a = j.at(key);
      if (static_cast<int>(a.size()) != p.n - 1) throw std::invalid_argument(std::string("JetPoint: ") + key + " needs n-1 entries");
      for (int k = 2; k <= p.n; ++k) {
        const auto& e = a[static_cast<size_t>(k - 2)];
        v[static_cast<size_t>(k)] = e.is_array() ? cplx(e[0].get<double>(), e[1].get<double>()) : cplx(e.get<double>());
      }
    };
    read("mu", p.mu);
    read("t", p.t);
    return p;
  }
};

// Principal n-th root, argument in (-pi/n, pi/n].
inline cplx principal_root(cplx z, int n) {
  // Adding +0.0 clears a negative zero so the negative real axis maps to arg = pi.
  z = cplx(z.real() + 0.0, z.imag() + 0.0);
  return std::polar(std::pow(std::abs(z), 1.0 / n), std::arg(z) / n);
}

// Coefficients m[2..n] of xbar = sum m_i x^(i-1) mod t^2, solved successively from
// tbar_k = sum_{l>=k} t_l C_{k,l}(m); m_i first enters tbar_(n+2-i) linearly.
inline std::vector<cplx> mbar_coeffs(const std::vector<cplx>& t, int n) {
  if (std::abs(t.at(static_cast<size_t>(n))) == 0) throw ChartBoundary("mbar_coeffs: t_n = 0 (boundary of the chart)");
  std::vector<cplx> m(static_cast<size_t>(n + 1), 0.0);
  cplx tn = t[static_cast<size_t>(n)];
  m[2] = principal_root(std::conj(tn) / tn, n);
  for (int i = 3; i <= n; ++i) {
    int k = n + 2 - i;
    cplx partial = conj_t_formula<cplx>(m, t, n)[static_cast<size_t>(k)];
    m[static_cast<size_t>(i)] = (std::conj(t[static_cast<size_t>(k)]) - partial) / (double(n) * tn * std::pow(m[2], n + 1 - i));
  }
  auto back = conj_t_formula<cplx>(m, t, n);
  double worst = 0, scale = 0;
  for (int k = 2; k <= n; ++k) {
    worst = std::max(worst, std::abs(back[static_cast<size_t>(k)] - std::conj(t[static_cast<size_t>(k)])));
    scale = std::max(scale, std::abs(t[static_cast<size_t>(k)]));
  }
  if (worst > 1e-10 * (1 + scale)) throw NumericFailure("mbar_coeffs: certificate failed", worst);
  return m;
}

namespace detail {

// Truncated products in C[x]/x^n; index = power of x.
inline std::vector<cplx> trunc_mul(const std::vector<cplx>& u, const std::vector<cplx>& v, int n) {
  std::vector<cplx> w(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; i + j < n; ++j) w[static_cast<size_t>(i + j)] += u[static_cast<size_t>(i)] * v[static_cast<size_t>(j)];
  return w;
}

// sum_k c[k] s^(k-1) for k = 2..n, with s a truncated series without constant term.
inline std::vector<cplx> compose(const std::vector<cplx>& c, const std::vector<cplx>& s, int n) {
  std::vector<cplx> out(static_cast<size_t>(n), 0.0), pw = s;
  for (int k = 2; k <= n; ++k) {
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] += c[static_cast<size_t>(k)] * pw[static_cast<size_t>(i)];
    pw = trunc_mul(pw, s, n);
  }
  return out;
}

}  // namespace detail

inline JetPoint act(const GL2Elem& g, const JetPoint& pt) {
  int n = pt.n;
  if (g.det() == 0) throw std::invalid_argument("act: singular group element");
  auto m = mbar_coeffs(pt.t, n);
  std::vector<cplx> x(static_cast<size_t>(n), 0.0), xbar(static_cast<size_t>(n), 0.0), y;
  if (n > 1) x[1] = 1;
  for (int i = 2; i <= n; ++i) xbar[static_cast<size_t>(i - 1)] = m[static_cast<size_t>(i)];
  std::vector<cplx> mub(static_cast<size_t>(n + 1), 0.0);
  for (int k = 2; k <= n; ++k) mub[static_cast<size_t>(k)] = std::conj(pt.mu[static_cast<size_t>(k)]);
  y = detail::compose(pt.mu, x, n);
  auto ybar = detail::compose(mub, xbar, n);
  std::vector<cplx> u(static_cast<size_t>(n + 1), 0.0), w(static_cast<size_t>(n + 1), 0.0);
  for (int i = 1; i < n; ++i) {
    u[static_cast<size_t>(i + 1)] = g.a * x[static_cast<size_t>(i)] + std::conj(g.b) * ybar[static_cast<size_t>(i)];
    w[static_cast<size_t>(i + 1)] = g.a * y[static_cast<size_t>(i)] + std::conj(g.b) * xbar[static_cast<size_t>(i)];
  }
  if (std::abs(u[2]) == 0) throw ChartBoundary("act: x' has no linear term");
  JetPoint out = JetPoint::make(n);
  out.t = conj_t_formula<cplx>(u, pt.t, n);
  if (std::abs(out.t[static_cast<size_t>(n)]) < 1e-300) throw ChartBoundary("act: image left the chart (t_n' = 0)");
  // Triangular solve of w = sum_k mu'_k (x')^(k-1).
  std::vector<cplx> us(static_cast<size_t>(n), 0.0);
  for (int i = 2; i <= n; ++i) us[static_cast<size_t>(i - 1)] = u[static_cast<size_t>(i)];
  std::vector<std::vector<cplx>> powers{us};
  for (int k = 3; k <= n; ++k) powers.push_back(detail::trunc_mul(powers.back(), us, n));
  for (int j = 2; j <= n; ++j) {
    cplx r = w[static_cast<size_t>(j)];
    for (int k = 2; k < j; ++k) r -= out.mu[static_cast<size_t>(k)] * powers[static_cast<size_t>(k - 2)][static_cast<size_t>(j - 1)];
    out.mu[static_cast<size_t>(j)] = r / powers[static_cast<size_t>(j - 2)][static_cast<size_t>(j - 1)];
  }
  return out;
}

}  // namespace hcs
