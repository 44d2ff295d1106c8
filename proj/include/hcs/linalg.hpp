#pragma once

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "jet.hpp"
#include "mpoly.hpp"

namespace hcs {

template <class R>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<size_t>(rows * cols), R(0)) {}
  Mat(int rows, int cols, std::vector<R> data) : r_(rows), c_(cols), a_(std::move(data)) {
    if (a_.size() != static_cast<size_t>(rows * cols)) throw std::invalid_argument("Mat: size mismatch");
  }
  Mat(std::initializer_list<std::initializer_list<R>> rows) {
    r_ = static_cast<int>(rows.size());
    c_ = r_ ? static_cast<int>(rows.begin()->size()) : 0;
    for (auto& row : rows) {
      if (static_cast<int>(row.size()) != c_) throw std::invalid_argument("Mat: ragged rows");
      for (auto& x : row) a_.push_back(x);
    }
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = R(1);
    return m;
  }
  static Mat unit(int n, int i, int j) {
    Mat m(n, n);
    m(i, j) = R(1);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  bool square() const { return r_ == c_; }
  R& operator()(int i, int j) { return a_[static_cast<size_t>(i * c_ + j)]; }
  const R& operator()(int i, int j) const { return a_[static_cast<size_t>(i * c_ + j)]; }
  const std::vector<R>& data() const { return a_; }

  Mat transpose() const {
    Mat t(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  std::vector<R> col(int j) const {
    std::vector<R> v;
    for (int i = 0; i < r_; ++i) v.push_back((*this)(i, j));
    return v;
  }
  R trace() const {
    R s(0);
    for (int i = 0; i < std::min(r_, c_); ++i) s += (*this)(i, i);
    return s;
  }
  bool is_zero() const {
    for (auto& x : a_)
      if (!is_zero_s(x)) return false;
    return true;
  }
  template <class F>
  auto map(F f) const {
    using T = decltype(f(a_[0]));
    Mat<T> m(r_, c_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(i, j) = f((*this)(i, j));
    return m;
  }

  Mat operator-() const {
    Mat m = *this;
    for (auto& x : m.a_) x = -x;
    return m;
  }
  Mat& operator+=(const Mat& o) {
    check_same(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    check_same(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(const Mat& a, const Mat& b) {
    if (a.c_ != b.r_) throw std::invalid_argument("Mat: shape mismatch in product");
    Mat m(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
      for (int k = 0; k < a.c_; ++k) {
        if (is_zero_s(a(i, k))) continue;
        for (int j = 0; j < b.c_; ++j) m(i, j) += a(i, k) * b(k, j);
      }
    return m;
  }
  friend Mat operator*(const R& s, Mat a) {
    for (auto& x : a.a_) x = s * x;
    return a;
  }
  friend std::vector<R> operator*(const Mat& a, const std::vector<R>& v) {
    std::vector<R> r(static_cast<size_t>(a.r_), R(0));
    for (int i = 0; i < a.r_; ++i)
      for (int j = 0; j < a.c_; ++j) r[static_cast<size_t>(i)] += a(i, j) * v[static_cast<size_t>(j)];
    return r;
  }
  friend bool operator==(const Mat& a, const Mat& b) { return a.r_ == b.r_ && a.c_ == b.c_ && a.a_ == b.a_; }
  friend bool operator!=(const Mat& a, const Mat& b) { return !(a == b); }

  Mat pow(unsigned e) const {
    Mat r = identity(r_), b = *this;
    while (e) {
      if (e & 1) r = r * b;
      e >>= 1;
      if (e) b = b * b;
    }
    return r;
  }

 private:
  void check_same(const Mat& o) const {
    if (r_ != o.r_ || c_ != o.c_) throw std::invalid_argument("Mat: shape mismatch");
  }
  int r_ = 0, c_ = 0;
  std::vector<R> a_;
};

template <class R>
std::ostream& operator<<(std::ostream& os, const Mat<R>& m) {
  os << "[";
  for (int i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (int j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
  }
  return os << "]";
}

template <class R>
Mat<R> commutator(const Mat<R>& a, const Mat<R>& b) { return a * b - b * a; }

using QMat = Mat<GaussRat>;
using PMat = Mat<MPoly>;
using CMat = Mat<cplx>;

inline nlohmann::json to_json(const QMat& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back({{"re", m(i, k).re_str()}, {"im", m(i, k).im_str()}});
    j.push_back(row);
  }
  return j;
}
inline QMat qmat_from_json(const nlohmann::json& j) {
  int r = static_cast<int>(j.size());
  int c = r ? static_cast<int>(j[0].size()) : 0;
  QMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) {
      auto& e = j[static_cast<size_t>(i)][static_cast<size_t>(k)];
      if (e.is_object()) m(i, k) = GaussRat::parse(e.at("re").get<std::string>(), e.value("im", std::string("0")));
      else if (e.is_string()) m(i, k) = GaussRat(GaussRat::parse_q(e.get<std::string>()));
      else m(i, k) = GaussRat(e.get<long>());
    }
  return m;
}

inline CMat to_cmat(const QMat& m) { return m.map([](const GaussRat& g) { return g.to_complex(); }); }

// Exact quotient in rings where the division is known to be exact.
inline GaussRat exact_div(const GaussRat& a, const GaussRat& b) { return a / b; }
inline cplx exact_div(const cplx& a, const cplx& b) { return a / b; }
inline MPoly exact_div(const MPoly& a, const MPoly& b) {
  auto q = a.divide(b);
  if (!q) throw std::logic_error("exact_div: inexact polynomial division");
  return *q;
}

// Bareiss fraction-free elimination; requires exact division in R.
template <class R>
R det_bareiss(Mat<R> m) {
  if (!m.square()) throw std::invalid_argument("det: matrix not square");
  int n = m.rows();
  if (n == 0) return R(1);
  R prev(1);
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (is_zero_s(m(k, k))) {
      int sw = -1;
      for (int i = k + 1; i < n; ++i)
        if (!is_zero_s(m(i, k))) { sw = i; break; }
      if (sw < 0) return R(0);
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(sw, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) m(i, j) = exact_div(m(i, j) * m(k, k) - m(i, k) * m(k, j), prev);
      m(i, k) = R(0);
    }
    prev = m(k, k);
  }
  return sign > 0 ? m(n - 1, n - 1) : -m(n - 1, n - 1);
}

// Laplace expansion along rows, memoized over the set of used columns.
// Division free, so it works over any commutative ring (jets included).
template <class R>
R det_laplace(const Mat<R>& m) {
  if (!m.square()) throw std::invalid_argument("det: matrix not square");
  int n = m.rows();
  if (n > 24) throw std::invalid_argument("det_laplace: matrix too large");
  if (n == 0) return R(1);
  std::unordered_map<uint32_t, R> memo;
  std::function<R(uint32_t)> rec = [&](uint32_t used) -> R {
    int row = std::popcount(used);
    if (row == n) return R(1);
    auto it = memo.find(used);
    if (it != memo.end()) return it->second;
    R s(0);
    int sign = 1;
    for (int j = 0; j < n; ++j) {
      if (used & (1u << j)) continue;
      if (!is_zero_s(m(row, j))) {
        R t = m(row, j) * rec(used | (1u << j));
        if (sign > 0) s += t;
        else s -= t;
      }
      sign = -sign;
    }
    memo.emplace(used, s);
    return s;
  };
  return rec(0);
}

// Permutation expansion, used as an independent oracle on small matrices.
template <class R>
R det_leibniz(const Mat<R>& m) {
  int n = m.rows();
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  R s(0);
  do {
    int inv = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (p[static_cast<size_t>(i)] > p[static_cast<size_t>(j)]) ++inv;
    R t(1);
    for (int i = 0; i < n; ++i) t *= m(i, p[static_cast<size_t>(i)]);
    if (inv % 2) s -= t;
    else s += t;
  } while (std::next_permutation(p.begin(), p.end()));
  return s;
}

inline GaussRat det_fraction_free(const QMat& m) { return det_bareiss(m); }
inline MPoly det_fraction_free(const PMat& m) { return det_bareiss(m); }

// Univariate polynomial over R as coefficients, lowest degree first.
template <class R>
using UPoly = std::vector<R>;

template <class R>
int udegree(const UPoly<R>& f) {
  for (int k = static_cast<int>(f.size()) - 1; k >= 0; --k)
    if (!is_zero_s(f[static_cast<size_t>(k)])) return k;
  return -1;
}

template <class R>
Mat<R> sylvester(const UPoly<R>& f, const UPoly<R>& g) {
  int m = udegree(f), k = udegree(g);
  if (m < 0 || k < 0) throw std::invalid_argument("sylvester: zero polynomial");
  int sz = m + k;
  Mat<R> s(sz, sz);
  for (int r = 0; r < k; ++r)
    for (int j = 0; j <= m; ++j) s(r, r + j) = f[static_cast<size_t>(m - j)];
  for (int r = 0; r < m; ++r)
    for (int j = 0; j <= k; ++j) s(k + r, r + j) = g[static_cast<size_t>(k - j)];
  return s;
}

template <class R>
R resultant(const UPoly<R>& f, const UPoly<R>& g) {
  int m = udegree(f), k = udegree(g);
  if (m < 0 && k < 0) throw std::invalid_argument("resultant: both inputs are zero");
  if (m < 0 || k < 0) return R(0);
  return det_laplace(sylvester(f, g));
}

// Reduced row echelon form over an exact field; returns pivot columns.
inline std::vector<int> rref(QMat& m) {
  std::vector<int> piv;
  int r = 0;
  for (int c = 0; c < m.cols() && r < m.rows(); ++c) {
    int p = -1;
    for (int i = r; i < m.rows(); ++i)
      if (!m(i, c).is_zero()) { p = i; break; }
    if (p < 0) continue;
    for (int j = 0; j < m.cols(); ++j) std::swap(m(r, j), m(p, j));
    GaussRat inv = GaussRat(1) / m(r, c);
    for (int j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (int i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c).is_zero()) continue;
      GaussRat f = m(i, c);
      for (int j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  return piv;
}

inline int rank(QMat m) { return static_cast<int>(rref(m).size()); }

inline std::vector<std::vector<GaussRat>> nullspace_exact(QMat m) {
  auto piv = rref(m);
  std::vector<bool> is_piv(static_cast<size_t>(m.cols()), false);
  for (int c : piv) is_piv[static_cast<size_t>(c)] = true;
  std::vector<std::vector<GaussRat>> basis;
  for (int f = 0; f < m.cols(); ++f) {
    if (is_piv[static_cast<size_t>(f)]) continue;
    std::vector<GaussRat> v(static_cast<size_t>(m.cols()), GaussRat(0));
    v[static_cast<size_t>(f)] = GaussRat(1);
    for (size_t r = 0; r < piv.size(); ++r) v[static_cast<size_t>(piv[r])] = -m(static_cast<int>(r), f);
    basis.push_back(std::move(v));
  }
  return basis;
}

inline std::optional<QMat> inverse(const QMat& a) {
  int n = a.rows();
  QMat aug(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n + i) = GaussRat(1);
  }
  auto piv = rref(aug);
  if (static_cast<int>(piv.size()) < n || piv[static_cast<size_t>(n - 1)] != n - 1) return std::nullopt;
  QMat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = aug(i, n + j);
  return r;
}

// Solves A x = b for square invertible A.
inline std::optional<std::vector<GaussRat>> solve(const QMat& a, const std::vector<GaussRat>& b) {
  int n = a.rows();
  QMat aug(n, n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) aug(i, j) = a(i, j);
    aug(i, n) = b[static_cast<size_t>(i)];
  }
  auto piv = rref(aug);
  if (static_cast<int>(piv.size()) != n || piv.back() != n - 1) return std::nullopt;
  std::vector<GaussRat> x(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = aug(i, n);
  return x;
}

// Gauss-Jordan over MPoly using only nonzero constant pivots. Suffices for
// matrices that are unimodular by structure (unitriangular blocks).
inline PMat inverse_unit_pivot(const PMat& a) {
  int n = a.rows();
  PMat m = a, inv = PMat::identity(n);
  std::vector<bool> done(static_cast<size_t>(n), false);
  std::vector<int> row_of(static_cast<size_t>(n), -1);
  for (int step = 0; step < n; ++step) {
    int pr = -1, pc = -1;
    for (int c = 0; c < n && pr < 0; ++c) {
      if (row_of[static_cast<size_t>(c)] >= 0) continue;
      for (int r = 0; r < n; ++r)
        if (!done[static_cast<size_t>(r)] && m(r, c).is_constant() && !m(r, c).is_zero()) {
          pr = r;
          pc = c;
          break;
        }
    }
    if (pr < 0) throw std::domain_error("inverse_unit_pivot: no constant pivot available");
    GaussRat s = GaussRat(1) / m(pr, pc).constant_term();
    for (int j = 0; j < n; ++j) {
      m(pr, j) *= s;
      inv(pr, j) *= s;
    }
    for (int r = 0; r < n; ++r) {
      if (r == pr || m(r, pc).is_zero()) continue;
      MPoly f = m(r, pc);
      for (int j = 0; j < n; ++j) {
        if (!m(pr, j).is_zero()) m(r, j) -= f * m(pr, j);
        if (!inv(pr, j).is_zero()) inv(r, j) -= f * inv(pr, j);
      }
    }
    done[static_cast<size_t>(pr)] = true;
    row_of[static_cast<size_t>(pc)] = pr;
  }
  PMat r(n, n);
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < n; ++j) r(c, j) = inv(row_of[static_cast<size_t>(c)], j);
  return r;
}

template <class R>
struct RatOf {
  static R make(long p, long q) { return R(GaussRat::frac(p, q)); }
};
template <>
struct RatOf<cplx> {
  static cplx make(long p, long q) { return cplx(static_cast<double>(p) / static_cast<double>(q)); }
};
template <class S>
struct RatOf<Jet<S>> {
  static Jet<S> make(long p, long q) { return Jet<S>(RatOf<S>::make(p, q)); }
};

// Characteristic polynomial det(X - M), coefficients lowest first, by
// Faddeev-LeVerrier; R must contain the rationals.
template <class R>
UPoly<R> charpoly(const Mat<R>& m) {
  int n = m.rows();
  UPoly<R> c(static_cast<size_t>(n + 1), R(0));
  c[static_cast<size_t>(n)] = R(1);
  Mat<R> id = Mat<R>::identity(n);
  Mat<R> aux(n, n);
  for (int k = 1; k <= n; ++k) {
    aux = m * aux + c[static_cast<size_t>(n - k + 1)] * id;
    c[static_cast<size_t>(n - k)] = RatOf<R>::make(-1, k) * (m * aux).trace();
  }
  return c;
}

}  // namespace hcs
