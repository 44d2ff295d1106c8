#pragma once

#include <gmpxx.h>

#include <complex>
#include <ostream>
#include <stdexcept>
#include <string>

namespace hcs {

using cplx = std::complex<double>;

// Exact element of Q(i).
struct GaussRat {
  mpq_class re{0}, im{0};

  GaussRat() = default;
  GaussRat(long v) : re(v), im(0) {}
  GaussRat(int v) : re(v), im(0) {}
  GaussRat(mpq_class r) : re(std::move(r)), im(0) { re.canonicalize(); }
  GaussRat(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {
    re.canonicalize();
    im.canonicalize();
  }

  static GaussRat frac(long p, long q) { return GaussRat(mpq_class(p, q)); }
  static GaussRat i() { return GaussRat(0, 1); }

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  bool is_one() const { return re == 1 && sgn(im) == 0; }
  bool is_real() const { return sgn(im) == 0; }

  GaussRat conj() const { return GaussRat(re, -im); }
  mpq_class norm() const { return re * re + im * im; }

  GaussRat operator-() const { return GaussRat(-re, -im); }
  GaussRat& operator+=(const GaussRat& o) { re += o.re; im += o.im; return *this; }
  GaussRat& operator-=(const GaussRat& o) { re -= o.re; im -= o.im; return *this; }
  GaussRat& operator*=(const GaussRat& o) {
    mpq_class r = re * o.re - im * o.im;
    mpq_class i = re * o.im + im * o.re;
    re = r;
    im = i;
    return *this;
  }
  GaussRat& operator/=(const GaussRat& o) {
    if (o.is_zero()) throw std::domain_error("GaussRat: division by zero");
    mpq_class n = o.norm();
    mpq_class r = (re * o.re + im * o.im) / n;
    mpq_class i = (im * o.re - re * o.im) / n;
    re = r;
    im = i;
    return *this;
  }

  friend GaussRat operator+(GaussRat a, const GaussRat& b) { return a += b; }
  friend GaussRat operator-(GaussRat a, const GaussRat& b) { return a -= b; }
  friend GaussRat operator*(GaussRat a, const GaussRat& b) { return a *= b; }
  friend GaussRat operator/(GaussRat a, const GaussRat& b) { return a /= b; }
  friend bool operator==(const GaussRat& a, const GaussRat& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const GaussRat& a, const GaussRat& b) { return !(a == b); }

  cplx to_complex() const { return {re.get_d(), im.get_d()}; }

  // "p/q" strings for each part.
  std::string re_str() const { return re.get_str(); }
  std::string im_str() const { return im.get_str(); }

  static mpq_class parse_q(const std::string& s) {
    mpq_class q;
    if (q.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
    q.canonicalize();
    return q;
  }
  static GaussRat parse(const std::string& re_s, const std::string& im_s) {
    return GaussRat(parse_q(re_s), parse_q(im_s));
  }

  std::string to_string() const {
    if (sgn(im) == 0) return re.get_str();
    if (sgn(re) == 0) return im.get_str() + "*i";
    return "(" + re.get_str() + (sgn(im) > 0 ? "+" : "") + im.get_str() + "*i)";
  }

  friend std::ostream& operator<<(std::ostream& os, const GaussRat& g) { return os << g.to_string(); }
};

inline GaussRat conj_s(const GaussRat& g) { return g.conj(); }
inline cplx conj_s(const cplx& z) { return std::conj(z); }
inline bool is_zero_s(const GaussRat& g) { return g.is_zero(); }
inline bool is_zero_s(const cplx& z) { return z == cplx(0); }

inline GaussRat pow_s(GaussRat b, unsigned e) {
  GaussRat r(1);
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

inline mpz_class factorial(unsigned n) {
  mpz_class r = 1;
  for (unsigned k = 2; k <= n; ++k) r *= k;
  return r;
}

inline mpz_class binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

}  // namespace hcs
