#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "scalar.hpp"

namespace hcs {

struct NumericFailure : std::runtime_error {
  double residual;
  NumericFailure(const std::string& what, double res) : std::runtime_error(what), residual(res) {}
};

// Horner evaluation of p and p'; coefficients lowest degree first.
inline void horner2(const std::vector<cplx>& c, cplx z, cplx& p, cplx& dp) {
  p = 0;
  dp = 0;
  for (size_t k = c.size(); k-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
}

inline double coeff_norm(const std::vector<cplx>& c) {
  double s = 0;
  for (auto& x : c) s += std::norm(x);
  return std::sqrt(s);
}

// Aberth-Ehrlich simultaneous iteration. Coefficients lowest degree first.
inline std::vector<cplx> roots_numeric(std::vector<cplx> c, int max_iter = 200) {
  while (!c.empty() && c.back() == cplx(0)) c.pop_back();
  if (c.size() < 2) throw std::invalid_argument("roots_numeric: degree must be at least 1");
  int n = static_cast<int>(c.size()) - 1;
  cplx lead = c.back();
  for (auto& x : c) x /= lead;

  // Roots at the origin are split off exactly.
  int zeros = 0;
  while (zeros < n && c[static_cast<size_t>(zeros)] == cplx(0)) ++zeros;
  std::vector<cplx> q(c.begin() + zeros, c.end());
  int m = n - zeros;
  std::vector<cplx> z(static_cast<size_t>(m));
  double tol_abs = 1e-10 * (1.0 + coeff_norm(c));

  if (m > 0) {
    // Start on a circle scaled to the Cauchy-style root bound.
    double r = 0;
    for (int k = 0; k < m; ++k) r = std::max(r, std::pow(std::abs(q[static_cast<size_t>(k)]), 1.0 / (m - k)));
    if (r == 0) r = 1;
    const double off = 0.4;
    for (int k = 0; k < m; ++k)
      z[static_cast<size_t>(k)] = std::polar(r, 2 * M_PI * k / m + off);

    bool conv = false;
    for (int it = 0; it < max_iter && !conv; ++it) {
      conv = true;
      for (int k = 0; k < m; ++k) {
        cplx p, dp;
        horner2(q, z[static_cast<size_t>(k)], p, dp);
        if (std::abs(p) == 0) continue;
        cplx ratio = p / dp;
        cplx s = 0;
        for (int j = 0; j < m; ++j)
          if (j != k) s += 1.0 / (z[static_cast<size_t>(k)] - z[static_cast<size_t>(j)]);
        cplx w = ratio / (1.0 - ratio * s);
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) w = ratio;
        z[static_cast<size_t>(k)] -= w;
        if (std::abs(w) > 1e-15 * (1 + std::abs(z[static_cast<size_t>(k)]))) conv = false;
      }
    }
    // Newton polish.
    for (auto& zk : z)
      for (int it = 0; it < 3; ++it) {
        cplx p, dp;
        horner2(q, zk, p, dp);
        if (dp == cplx(0) || std::abs(p) == 0) break;
        cplx zn = zk - p / dp;
        cplx pn, dpn;
        horner2(q, zn, pn, dpn);
        if (std::abs(pn) < std::abs(p)) zk = zn;
        else break;
      }
  }
  double worst = 0;
  for (auto& zk : z) {
    cplx p, dp;
    horner2(c, zk, p, dp);
    worst = std::max(worst, std::abs(p));
  }
  if (worst > tol_abs) throw NumericFailure("roots_numeric: no convergence", worst);
  std::vector<cplx> out(static_cast<size_t>(zeros), cplx(0));
  out.insert(out.end(), z.begin(), z.end());
  return out;
}

// Monic polynomial with the given roots, coefficients lowest first.
inline std::vector<cplx> poly_from_roots(const std::vector<cplx>& r) {
  std::vector<cplx> c{1};
  for (auto& x : r) {
    std::vector<cplx> d(c.size() + 1, 0);
    for (size_t k = 0; k < c.size(); ++k) {
      d[k + 1] += c[k];
      d[k] -= x * c[k];
    }
    c = d;
  }
  return c;
}

}  // namespace hcs
