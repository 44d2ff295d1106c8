#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <istream>
#include <ostream>
#include <sstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roots.hpp"
#include "scalar.hpp"

namespace hcs {

// Complex samples on a square grid; entry (i, j) sits at (x_i, y_j).
using Field = Eigen::ArrayXXcd;
using RField = Eigen::ArrayXXd;

struct DegenerateGauge : std::runtime_error {
  double min_abs;
  std::vector<std::pair<int, int>> locus;
  DegenerateGauge(const std::string& w, double m, std::vector<std::pair<int, int>> l)
      : std::runtime_error(w), min_abs(m), locus(std::move(l)) {}
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  std::vector<double> history;
  SolverFailure(const std::string& w, std::vector<double> h) : std::runtime_error(w), history(std::move(h)) {}
};

struct LeadingTermMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Geometry { Periodic, Dirichlet };

namespace gf_detail {

struct FftPlan {
  int N;
  fftw_complex* buf;
  fftw_plan fwd, bwd;
  explicit FftPlan(int n) : N(n) {
    buf = fftw_alloc_complex(static_cast<size_t>(n) * static_cast<size_t>(n));
    fwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

// One-sided and central 4th-order first-derivative stencils, in units of 1/(12h).
inline cplx fd1(const cplx* f, int i, int S, int stride) {
  auto at = [&](int k) { return f[static_cast<ptrdiff_t>(k) * stride]; };
  if (i == 0) return -25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4);
  if (i == 1) return -3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4);
  if (i == S - 2) return 3.0 * at(S - 1) + 10.0 * at(S - 2) - 18.0 * at(S - 3) + 6.0 * at(S - 4) - at(S - 5);
  if (i == S - 1) return 25.0 * at(S - 1) - 48.0 * at(S - 2) + 36.0 * at(S - 3) - 16.0 * at(S - 4) + 3.0 * at(S - 5);
  return at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2);
}

// 4th-order second-derivative stencil at an interior node, in units of 1/(12h^2).
inline std::vector<std::pair<int, double>> fd2_stencil(int i, int S) {
  if (i == 1) return {{0, 10}, {1, -15}, {2, -4}, {3, 14}, {4, -6}, {5, 1}};
  if (i == S - 2) return {{S - 1, 10}, {S - 2, -15}, {S - 3, -4}, {S - 4, 14}, {S - 5, -6}, {S - 6, 1}};
  return {{i - 2, -1}, {i - 1, 16}, {i, -30}, {i + 1, 16}, {i + 2, -1}};
}

}  // namespace gf_detail

// Square grid patch with its derivative backend: spectral on a periodic square
// of side L with N samples per side, or 4th-order finite differences on the
// square [-L/2, L/2]^2 with N intervals per side.
class Patch {
 public:
  static Patch periodic(int N, double L = 2 * M_PI) {
    if (N < 4 || N % 2) throw std::invalid_argument("Patch::periodic: N must be even and at least 4");
    Patch p;
    p.geo_ = Geometry::Periodic;
    p.N_ = N;
    p.L_ = L;
    p.fft_ = std::make_shared<gf_detail::FftPlan>(N);
    return p;
  }
  static Patch dirichlet(int N, double L = 1.0) {
    if (N < 6) throw std::invalid_argument("Patch::dirichlet: N must be at least 6");
    Patch p;
    p.geo_ = Geometry::Dirichlet;
    p.N_ = N;
    p.L_ = L;
    return p;
  }

  Geometry geometry() const { return geo_; }
  bool is_periodic() const { return geo_ == Geometry::Periodic; }
  int N() const { return N_; }
  double L() const { return L_; }
  int size() const { return is_periodic() ? N_ : N_ + 1; }
  double h() const { return L_ / N_; }
  // Algebraic order of the derivative backend; 0 stands for spectral.
  int order() const { return is_periodic() ? 0 : 4; }
  std::string backend() const { return is_periodic() ? "spectral" : "fd4"; }
  double coord(int i) const { return is_periodic() ? i * h() : -L_ / 2 + i * h(); }
  cplx z(int i, int j) const { return {coord(i), coord(j)}; }
  bool on_boundary(int i, int j) const {
    return !is_periodic() && (i == 0 || j == 0 || i == N_ || j == N_);
  }

  Field zero() const { return Field::Zero(size(), size()); }
  Field constant(cplx c) const { return Field::Constant(size(), size(), c); }
  Field sample(const std::function<cplx(cplx)>& f) const {
    Field out(size(), size());
    for (int j = 0; j < size(); ++j)
      for (int i = 0; i < size(); ++i) out(i, j) = f(z(i, j));
    return out;
  }

  Field dx(const Field& f) const { return is_periodic() ? spectral(f, 0) : fd(f, 0); }
  Field dy(const Field& f) const { return is_periodic() ? spectral(f, 1) : fd(f, 1); }
  // d = (d_x - i d_y)/2 and dbar = (d_x + i d_y)/2.
  Field d(const Field& f) const { return 0.5 * (dx(f) - cplx(0, 1) * dy(f)); }
  Field db(const Field& f) const { return 0.5 * (dx(f) + cplx(0, 1) * dy(f)); }
  Field d(const Field& f, int k) const {
    Field r = f;
    for (int i = 0; i < k; ++i) r = d(r);
    return r;
  }

  // Inverse of dbar on mean-zero periodic fields; the mean is dropped.
  Field db_inverse(const Field& f) const {
    if (!is_periodic()) throw std::logic_error("db_inverse needs a periodic patch");
    auto& P = *fft_;
    load(f);
    fftw_execute(P.fwd);
    for (int j = 0; j < N_; ++j)
      for (int i = 0; i < N_; ++i) {
        cplx s = 0.5 * (cplx(0, wave(i)) - wave(j));
        cplx& v = at(i, j);
        v = std::abs(s) == 0.0 ? cplx(0) : v / s;
      }
    fftw_execute(P.bwd);
    return store();
  }

  nlohmann::json header(int n) const {
    return {{"n", n}, {"N", N_}, {"L", L_}, {"geometry", is_periodic() ? "periodic" : "dirichlet"}, {"backend", backend()}};
  }

 private:
  Geometry geo_ = Geometry::Periodic;
  int N_ = 0;
  double L_ = 1;
  std::shared_ptr<gf_detail::FftPlan> fft_;

  double wave(int m) const {
    int k = m <= N_ / 2 ? m : m - N_;
    return 2 * M_PI * k / L_;
  }
  cplx& at(int i, int j) const { return reinterpret_cast<cplx*>(fft_->buf)[i + static_cast<ptrdiff_t>(N_) * j]; }
  void load(const Field& f) const {
    for (int j = 0; j < N_; ++j)
      for (int i = 0; i < N_; ++i) at(i, j) = f(i, j);
  }
  Field store() const {
    Field out(N_, N_);
    double s = 1.0 / (static_cast<double>(N_) * N_);
    for (int j = 0; j < N_; ++j)
      for (int i = 0; i < N_; ++i) out(i, j) = at(i, j) * s;
    return out;
  }
  Field spectral(const Field& f, int axis) const {
    load(f);
    fftw_execute(fft_->fwd);
    for (int j = 0; j < N_; ++j)
      for (int i = 0; i < N_; ++i) {
        int m = axis == 0 ? i : j;
        at(i, j) *= m == N_ / 2 ? cplx(0) : cplx(0, wave(m));
      }
    fftw_execute(fft_->bwd);
    return store();
  }
  Field fd(const Field& f, int axis) const {
    int S = size();
    Field out(S, S);
    double s = 1.0 / (12 * h());
    for (int a = 0; a < S; ++a)
      for (int i = 0; i < S; ++i) {
        if (axis == 0)
          out(i, a) = s * gf_detail::fd1(&f(0, a), i, S, 1);
        else
          out(a, i) = s * gf_detail::fd1(&f(a, 0), i, S, S);
      }
    return out;
  }
};

inline double max_abs(const Field& f) { return f.abs().maxCoeff(); }

// Max over nodes at least `margin` away from a Dirichlet boundary.
inline double max_abs_interior(const Patch& p, const Field& f, int margin) {
  if (p.is_periodic() || margin == 0) return max_abs(f);
  int S = p.size();
  return f.block(margin, margin, S - 2 * margin, S - 2 * margin).abs().maxCoeff();
}

// Sum of random Fourier modes exp(i(a x + b y) 2 pi / L) with |a|,|b| <= kmax.
// Real output when `real` is set. Periodic on periodic patches.
inline Field smooth_random_field(const Patch& p, std::mt19937& rng, int kmax, double amp, bool real = false) {
  std::uniform_real_distribution<double> u(-1, 1);
  Field f = p.zero();
  double w = 2 * M_PI / p.L();
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b) {
      cplx c(u(rng), u(rng));
      c *= amp / (1.0 + a * a + b * b);
      for (int j = 0; j < p.size(); ++j)
        for (int i = 0; i < p.size(); ++i)
          f(i, j) += c * std::exp(cplx(0, w * (a * p.coord(i) + b * p.coord(j))));
    }
  if (real) f = f.real().cast<cplx>();
  return f;
}

enum class MatrixTag { Companion, StrictlyLower, UpperTriangular, Traceless };

// n x n matrix of fields, entries row-major.
struct MatrixField {
  int n = 0;
  std::vector<Field> e;

  MatrixField() = default;
  MatrixField(int dim, const Patch& p) : n(dim), e(static_cast<size_t>(dim * dim), p.zero()) {}

  Field& operator()(int i, int j) { return e[static_cast<size_t>(i * n + j)]; }
  const Field& operator()(int i, int j) const { return e[static_cast<size_t>(i * n + j)]; }
  int rows() const { return e.empty() ? 0 : static_cast<int>(e[0].rows()); }

  Eigen::MatrixXcd node(int a, int b) const {
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = (*this)(i, j)(a, b);
    return m;
  }
  void set_node(int a, int b, const Eigen::MatrixXcd& m) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) (*this)(i, j)(a, b) = m(i, j);
  }
  static MatrixField constant(const Patch& p, const Eigen::MatrixXcd& m) {
    MatrixField r(static_cast<int>(m.rows()), p);
    for (int i = 0; i < r.n; ++i)
      for (int j = 0; j < r.n; ++j) r(i, j) = p.constant(m(i, j));
    return r;
  }
  double max_abs() const {
    double r = 0;
    for (auto& f : e) r = std::max(r, f.abs().maxCoeff());
    return r;
  }
  MatrixField map(const std::function<Field(const Field&)>& f) const {
    MatrixField r = *this;
    for (auto& x : r.e) x = f(x);
    return r;
  }
  MatrixField& operator+=(const MatrixField& o) {
    for (size_t k = 0; k < e.size(); ++k) e[k] += o.e[k];
    return *this;
  }
  MatrixField& operator-=(const MatrixField& o) {
    for (size_t k = 0; k < e.size(); ++k) e[k] -= o.e[k];
    return *this;
  }
  friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
  friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
  friend MatrixField operator*(cplx s, MatrixField a) {
    for (auto& x : a.e) x *= s;
    return a;
  }
  friend MatrixField operator*(const MatrixField& a, const MatrixField& b) {
    MatrixField r = a;
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < a.n; ++j) {
        Field s = a(i, 0) * b(0, j);
        for (int k = 1; k < a.n; ++k) s += a(i, k) * b(k, j);
        r(i, j) = s;
      }
    return r;
  }
  // Pointwise conjugate transpose.
  MatrixField adjoint() const {
    MatrixField r = *this;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = (*this)(j, i).conjugate();
    return r;
  }
  MatrixField inverse() const {
    MatrixField r = *this;
    int S = rows();
    for (int b = 0; b < S; ++b)
      for (int a = 0; a < S; ++a) r.set_node(a, b, node(a, b).inverse());
    return r;
  }

  // Throws PreconditionError unless every tag holds to `tol` at every node.
  void require(const std::vector<MatrixTag>& tags, double tol = 1e-10) const {
    auto fail = [](const std::string& w) { throw PreconditionError("structural tag violated: " + w); };
    for (auto t : tags) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double m = (*this)(i, j).abs().maxCoeff();
          switch (t) {
            case MatrixTag::StrictlyLower:
              if (j >= i && m > tol) fail("strictly lower");
              if (j == i - 1 && (*this)(i, j).abs().minCoeff() <= tol) fail("principal subdiagonal");
              break;
            case MatrixTag::UpperTriangular:
              if (j < i && m > tol) fail("upper triangular");
              break;
            case MatrixTag::Companion:
              if (j < n - 1 && ((i == j + 1) ? ((*this)(i, j) - 1.0).abs().maxCoeff() > tol : m > tol)) fail("companion");
              break;
            case MatrixTag::Traceless:
              break;
          }
        }
      if (t == MatrixTag::Traceless) {
        Field tr = (*this)(0, 0);
        for (int i = 1; i < n; ++i) tr += (*this)(i, i);
        if (tr.abs().maxCoeff() > tol) fail("traceless");
      }
    }
  }
};

inline MatrixField d(const Patch& p, const MatrixField& m) { return m.map([&](const Field& f) { return p.d(f); }); }
inline MatrixField db(const Patch& p, const MatrixField& m) { return m.map([&](const Field& f) { return p.db(f); }); }

// F = d A2 - dbar A1 + [A1, A2].
inline MatrixField curvature(const Patch& p, const MatrixField& A1, const MatrixField& A2) {
  return d(p, A2) - db(p, A1) + A1 * A2 - A2 * A1;
}

// Gauge action of G: A1 -> G A1 G^-1 - dG G^-1 and A2 -> G A2 G^-1 - dbar G G^-1.
inline std::pair<MatrixField, MatrixField> gauge_transform(const Patch& p, const MatrixField& G, const MatrixField& A1,
                                                           const MatrixField& A2) {
  MatrixField Gi = G.inverse();
  return {G * A1 * Gi - d(p, G) * Gi, G * A2 * Gi - db(p, G) * Gi};
}
inline MatrixField gauge_transform_10(const Patch& p, const MatrixField& G, const MatrixField& A1) {
  return G * A1 * G.inverse() - d(p, G) * G.inverse();
}

// Companion matrix with (i+1, i) = 1 and t_k at (n-k, n-1), 0-based; t[1] sits
// on the diagonal corner.
inline MatrixField companion(const Patch& p, int n, const std::vector<Field>& t) {
  MatrixField C(n, p);
  for (int i = 0; i + 1 < n; ++i) C(i + 1, i) = p.constant(1);
  for (int k = 1; k <= n && k < static_cast<int>(t.size()); ++k) C(n - k, n - 1) = t[static_cast<size_t>(k)];
  return C;
}

// Principal-branch continuous n-th root of a nonvanishing field, following the
// phase along the first column and then along every row.
inline Field continuous_root(const Field& D, double power) {
  int S = static_cast<int>(D.rows());
  RField ph(S, S);
  auto wrap = [](double a) { return a - 2 * M_PI * std::round(a / (2 * M_PI)); };
  ph(0, 0) = std::arg(D(0, 0));
  for (int i = 1; i < S; ++i) ph(i, 0) = ph(i - 1, 0) + wrap(std::arg(D(i, 0)) - ph(i - 1, 0));
  for (int i = 0; i < S; ++i)
    for (int j = 1; j < S; ++j) ph(i, j) = ph(i, j - 1) + wrap(std::arg(D(i, j)) - ph(i, j - 1));
  for (int i = 1; i < S; ++i)
    for (int j = 0; j < S; ++j)
      if (std::abs(ph(i, j) - ph(i - 1, j)) > M_PI / 2)
        throw DegenerateGauge("gauge determinant winds on the patch; no continuous root", std::abs(D(i, j)), {{i, j}});
  Field out(S, S);
  for (int j = 0; j < S; ++j)
    for (int i = 0; i < S; ++i) out(i, j) = std::exp(power * cplx(std::log(std::abs(D(i, j))), ph(i, j)));
  return out;
}

struct ParabolicGauge {
  MatrixField P;
  // that[k] for k = 2..n; that[0] and that[1] stay zero.
  std::vector<Field> that;
  MatrixField companion;
  double companion_residual = 0;
  // max |coefficient of nabla^(n-1) u in nabla^n u|, zero in the continuum.
  double trace_defect = 0;
  double min_det = 0;
};

// Row-vector covariant derivative R -> R A1 - dR.
inline std::vector<Field> nabla_row(const Patch& p, const MatrixField& A1, const std::vector<Field>& R) {
  int n = A1.n;
  std::vector<Field> out(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    Field s = -p.d(R[static_cast<size_t>(j)]);
    for (int k = 0; k < n; ++k) s += R[static_cast<size_t>(k)] * A1(k, j);
    out[static_cast<size_t>(j)] = s;
  }
  return out;
}

// Parabolic gauge P (det 1, last row zero except its last entry) with
// P A1 P^-1 + P d(P^-1) companion. Rows of P are built from u = f e_n as
// R_n = u and R_{i-1} = nabla R_i - C_i u, with f = D^(-1/n) and D the
// determinant of (nabla^(n-1) e_n, ..., nabla e_n, e_n).
inline ParabolicGauge parabolic_gauge(const Patch& p, const MatrixField& A1, double threshold = 1e-8) {
  int n = A1.n, S = p.size();
  auto row_matrix = [&](const std::vector<std::vector<Field>>& rows, int a, int b) {
    Eigen::MatrixXcd m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)](a, b);
    return m;
  };
  std::vector<std::vector<Field>> V(static_cast<size_t>(n));
  V[0] = std::vector<Field>(static_cast<size_t>(n), p.zero());
  V[0][static_cast<size_t>(n - 1)] = p.constant(1);
  for (int k = 1; k < n; ++k) V[static_cast<size_t>(k)] = nabla_row(p, A1, V[static_cast<size_t>(k - 1)]);
  std::vector<std::vector<Field>> rev(V.rbegin(), V.rend());
  Field D(S, S);
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a) D(a, b) = row_matrix(rev, a, b).determinant();
  double mn = D.abs().minCoeff();
  if (mn < threshold) {
    std::vector<std::pair<int, int>> locus;
    for (int b = 0; b < S; ++b)
      for (int a = 0; a < S; ++a)
        if (std::abs(D(a, b)) < threshold) locus.emplace_back(a, b);
    throw DegenerateGauge("parabolic gauge degenerate: determinant below threshold", mn, locus);
  }
  Field f = continuous_root(D, -1.0 / n);

  std::vector<std::vector<Field>> U(static_cast<size_t>(n + 1));
  U[0] = std::vector<Field>(static_cast<size_t>(n), p.zero());
  U[0][static_cast<size_t>(n - 1)] = f;
  for (int k = 1; k <= n; ++k) U[static_cast<size_t>(k)] = nabla_row(p, A1, U[static_cast<size_t>(k - 1)]);

  // nabla^n u = sum_k c_k nabla^k u, solved node by node.
  std::vector<Field> c(static_cast<size_t>(n), p.zero());
  std::vector<std::vector<Field>> low(U.begin(), U.begin() + n);
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a) {
      Eigen::MatrixXcd M = row_matrix(low, a, b);
      Eigen::VectorXcd rhs(n);
      for (int j = 0; j < n; ++j) rhs(j) = U[static_cast<size_t>(n)][static_cast<size_t>(j)](a, b);
      Eigen::VectorXcd sol = M.transpose().partialPivLu().solve(rhs);
      for (int k = 0; k < n; ++k) c[static_cast<size_t>(k)](a, b) = sol(k);
    }

  ParabolicGauge out;
  out.min_det = mn;
  out.trace_defect = max_abs(c[static_cast<size_t>(n - 1)]);
  // Companion entries C_i (row i of the last column, 1-based). The rows obey
  // R_{i-1} = nabla R_i - C_i u, so nabla^n u = sum_i nabla^(i-1)(C_i u) and
  // c_k = sum_{i>k} binom(i-1, k) (-d)^(i-1-k) C_i; solved from k = n-1 down.
  std::vector<Field> C(static_cast<size_t>(n + 1), p.zero());
  std::vector<std::vector<Field>> negd(static_cast<size_t>(n + 1));  // negd[i][j] = (-d)^j C_i
  for (int k = n - 1; k >= 0; --k) {
    Field v = c[static_cast<size_t>(k)];
    for (int i = k + 2; i <= n; ++i) {
      double binom = 1;
      for (int m = 1; m <= k; ++m) binom = binom * (i - 1 - k + m) / m;
      v -= binom * negd[static_cast<size_t>(i)][static_cast<size_t>(i - 1 - k)];
    }
    C[static_cast<size_t>(k + 1)] = v;
    auto& nd = negd[static_cast<size_t>(k + 1)];
    nd.push_back(v);
    for (int j = 1; j <= k; ++j) nd.push_back(-p.d(nd.back()));
  }
  out.P = MatrixField(n, p);
  std::vector<Field> R = U[0];
  for (int i = n; i >= 1; --i) {
    for (int col = 0; col < n; ++col) out.P(i - 1, col) = R[static_cast<size_t>(col)];
    if (i == 1) break;
    R = nabla_row(p, A1, R);
    for (int col = 0; col < n; ++col) R[static_cast<size_t>(col)] -= C[static_cast<size_t>(i)] * U[0][static_cast<size_t>(col)];
  }
  auto Ci = [&](int i) -> const Field& { return C[static_cast<size_t>(i)]; };
  out.that.assign(static_cast<size_t>(n + 1), p.zero());
  for (int k = 2; k <= n; ++k) out.that[static_cast<size_t>(k)] = Ci(n + 1 - k);
  out.companion = companion(p, n, out.that);
  out.companion_residual = (gauge_transform_10(p, out.P, A1) - out.companion).max_abs();
  return out;
}

// ---------------------------------------------------------------------------
// Holomorphic differentials t_k = tr(Phi1^(k-1) A1).

// Elementary symmetric functions e_0..e_n of the eigenvalues (Faddeev-LeVerrier).
inline std::vector<cplx> elementary_symmetric(const Eigen::MatrixXcd& M) {
  int n = static_cast<int>(M.rows());
  std::vector<cplx> e(static_cast<size_t>(n + 1));
  e[0] = 1;
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    Eigen::MatrixXcd MB = M * B;
    cplx ck = -MB.trace() / static_cast<double>(k);
    e[static_cast<size_t>(k)] = (k % 2 ? -1.0 : 1.0) * ck;
    B = MB + ck * Eigen::MatrixXcd::Identity(n, n);
  }
  return e;
}

struct ExtractT {
  std::vector<Field> t;              // t[k], k = 2..n
  std::vector<double> dbar_residual;  // max |dbar t_k|
  // max |[lambda^(k-1)] e_k(lambda Phi1 + A1) - (-1)^(k-1) t_k| over nodes and k.
  double charpoly_mismatch = 0;
};

inline ExtractT extract_t(const Patch& p, const MatrixField& Phi1, const MatrixField& A1, double tag_tol = 1e-10) {
  Phi1.require({MatrixTag::StrictlyLower}, tag_tol);
  int n = Phi1.n, S = p.size();
  ExtractT out;
  out.t.assign(static_cast<size_t>(n + 1), p.zero());
  out.dbar_residual.assign(static_cast<size_t>(n + 1), 0.0);
  MatrixField pw = MatrixField::constant(p, Eigen::MatrixXcd::Identity(n, n));
  for (int k = 2; k <= n; ++k) {
    pw = pw * Phi1;
    MatrixField m = pw * A1;
    Field tr = m(0, 0);
    for (int i = 1; i < n; ++i) tr += m(i, i);
    out.t[static_cast<size_t>(k)] = tr;
    out.dbar_residual[static_cast<size_t>(k)] = max_abs(p.db(tr));
  }
  int M = n + 1;
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a) {
      Eigen::MatrixXcd F = Phi1.node(a, b), A = A1.node(a, b);
      std::vector<std::vector<cplx>> e(static_cast<size_t>(M));
      std::vector<cplx> lam(static_cast<size_t>(M));
      for (int m = 0; m < M; ++m) {
        lam[static_cast<size_t>(m)] = std::polar(1.0, 2 * M_PI * m / M);
        e[static_cast<size_t>(m)] = elementary_symmetric(lam[static_cast<size_t>(m)] * F + A);
      }
      for (int k = 2; k <= n; ++k) {
        cplx coef = 0;
        for (int m = 0; m < M; ++m)
          coef += e[static_cast<size_t>(m)][static_cast<size_t>(k)] * std::pow(lam[static_cast<size_t>(m)], -(k - 1));
        coef /= static_cast<double>(M);
        double sgn = (k - 1) % 2 ? -1.0 : 1.0;
        out.charpoly_mismatch = std::max(out.charpoly_mismatch, std::abs(coef - sgn * out.t[static_cast<size_t>(k)](a, b)));
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Lambda families A(lambda) = lambda Phi + A + lambda^-1 Psi, split by type:
// (1,0) part lambda Phi1 + A1 + lambda^-1 Psi1, (0,1) part lambda Phi2 + A2 + lambda^-1 Psi2.

struct LambdaFamily {
  MatrixField Phi1, Phi2, A1, A2, Psi1, Psi2;

  std::pair<MatrixField, MatrixField> at(cplx lambda) const {
    return {lambda * Phi1 + A1 + (1.0 / lambda) * Psi1, lambda * Phi2 + A2 + (1.0 / lambda) * Psi2};
  }

  // Phi2 = sum_k mu_k Phi1^(k-1), A2 = -A1^dagger, Psi1 = Phi2^dagger, Psi2 = Phi1^dagger.
  static LambdaFamily standard(const Patch& p, const MatrixField& Phi1, const std::vector<Field>& mu, const MatrixField& A1) {
    int n = Phi1.n;
    MatrixField Phi2(n, p), pw = Phi1;
    for (int k = 2; k <= n && k < static_cast<int>(mu.size()); ++k) {
      Phi2 += pw.map([&](const Field& f) { return Field(f * mu[static_cast<size_t>(k)]); });
      pw = pw * Phi1;
    }
    return {Phi1, Phi2, A1, -1.0 * A1.adjoint(), Phi2.adjoint(), Phi1.adjoint()};
  }

  // max over nodes of |-A(-1/conj(lambda))^* - A(lambda)| with * the conjugate
  // transpose exchanging the (1,0) and (0,1) parts.
  double reality_defect(cplx lambda) const {
    auto [a1, a2] = at(lambda);
    auto [b1, b2] = at(-1.0 / std::conj(lambda));
    return std::max((-1.0 * b2.adjoint() - a1).max_abs(), (-1.0 * b1.adjoint() - a2).max_abs());
  }
};

struct ParabolicCoords {
  std::vector<Field> that, muhat;  // index k = 1..n
  double companion_residual = 0;
};

// Parabolic coordinates of the family at lambda: that from the companion form of
// the (1,0) part, muhat_k from the first column of the transformed (0,1) part.
inline ParabolicCoords parabolic_coordinates(const Patch& p, const LambdaFamily& fam, cplx lambda) {
  auto [a1, a2] = fam.at(lambda);
  ParabolicGauge g = parabolic_gauge(p, a1);
  MatrixField Pi = g.P.inverse();
  MatrixField b2 = g.P * a2 * Pi - db(p, g.P) * Pi;
  ParabolicCoords out;
  out.that = g.that;
  out.muhat.assign(static_cast<size_t>(a1.n + 1), p.zero());
  for (int k = 1; k <= a1.n; ++k) out.muhat[static_cast<size_t>(k)] = b2(k - 1, 0);
  out.companion_residual = g.companion_residual;
  return out;
}

struct LambdaLeading {
  bool at_infinity = true;
  std::vector<double> radii;
  // Expected and fitted exponents of that_k and muhat_k (NaN when the
  // coefficient vanishes identically).
  std::vector<double> t_expected, t_fit, mu_expected, mu_fit;
  // Circle averages of lambda^-e that_k and lambda^-e muhat_k at the extreme radius.
  std::vector<Field> t_coeff, mu_coeff;
  // Per radius: circle mean of the max-norm of that_k and muhat_k.
  std::vector<std::vector<double>> t_norm, mu_norm;

  // Exponent estimate at radius r from the neighbouring radius (the next one
  // for the first row). Index [r][k]; NaN where the norm vanishes.
  std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> local_exponents() const {
    auto est = [&](const std::vector<std::vector<double>>& nm) {
      std::vector<std::vector<double>> out(radii.size());
      for (size_t r = 0; r < radii.size(); ++r) {
        size_t a = r == 0 ? 0 : r - 1, b = r == 0 ? 1 : r;
        out[r].assign(nm[r].size(), std::nan(""));
        if (radii.size() < 2) continue;
        for (size_t k = 2; k < nm[r].size(); ++k)
          if (nm[a][k] > 1e-300 && nm[b][k] > 1e-300) out[r][k] = std::log(nm[b][k] / nm[a][k]) / std::log(radii[b] / radii[a]);
      }
      return out;
    };
    return {est(t_norm), est(mu_norm)};
  }
};

// Samples parabolic coordinates on circles |lambda| = r for each radius and
// fits leading exponents from the last two radii. The leading coefficient is
// the mean of lambda^-e f(lambda) over `samples` points on the extreme circle.
// Exponents (lambda -> infinity): that_k ~ k-1, muhat_k ~ 2-k; (lambda -> 0):
// that_k ~ 1-k, muhat_k ~ k-2. Throws LeadingTermMismatch when a fitted
// exponent is off by 0.1 or more.
inline LambdaLeading lambda_leading(const Patch& p, const LambdaFamily& fam, const std::vector<double>& radii, int samples = 8) {
  int n = fam.Phi1.n;
  LambdaLeading out;
  out.radii = radii;
  out.at_infinity = radii.back() > 1;
  int s = out.at_infinity ? 1 : -1;
  out.t_expected.assign(static_cast<size_t>(n + 1), 0);
  out.mu_expected.assign(static_cast<size_t>(n + 1), 0);
  out.t_fit.assign(static_cast<size_t>(n + 1), std::nan(""));
  out.mu_fit.assign(static_cast<size_t>(n + 1), std::nan(""));
  out.t_coeff.assign(static_cast<size_t>(n + 1), p.zero());
  out.mu_coeff.assign(static_cast<size_t>(n + 1), p.zero());
  for (int k = 2; k <= n; ++k) {
    out.t_expected[static_cast<size_t>(k)] = s * (k - 1);
    out.mu_expected[static_cast<size_t>(k)] = s * (2 - k);
  }
  // Per radius: circle mean of |f| (max over nodes) and the Laurent coefficient.
  std::vector<std::vector<double>> tnorm(radii.size(), std::vector<double>(static_cast<size_t>(n + 1))),
      mnorm = tnorm;
  for (size_t r = 0; r < radii.size(); ++r) {
    bool last = r + 1 == radii.size();
    for (int m = 0; m < samples; ++m) {
      cplx lam = std::polar(radii[r], 2 * M_PI * (m + 0.5) / samples);
      ParabolicCoords pc = parabolic_coordinates(p, fam, lam);
      for (int k = 2; k <= n; ++k) {
        tnorm[r][static_cast<size_t>(k)] += max_abs(pc.that[static_cast<size_t>(k)]) / samples;
        mnorm[r][static_cast<size_t>(k)] += max_abs(pc.muhat[static_cast<size_t>(k)]) / samples;
        if (last) {
          out.t_coeff[static_cast<size_t>(k)] +=
              pc.that[static_cast<size_t>(k)] * std::pow(lam, -out.t_expected[static_cast<size_t>(k)]) / double(samples);
          out.mu_coeff[static_cast<size_t>(k)] +=
              pc.muhat[static_cast<size_t>(k)] * std::pow(lam, -out.mu_expected[static_cast<size_t>(k)]) / double(samples);
        }
      }
    }
  }
  out.t_norm = tnorm;
  out.mu_norm = mnorm;
  if (radii.size() >= 2) {
    size_t a = radii.size() - 2, b = radii.size() - 1;
    double lr = std::log(radii[b] / radii[a]);
    for (int k = 2; k <= n; ++k) {
      auto fit = [&](const std::vector<std::vector<double>>& nm, const Field& coeff, double expect, double& dst) {
        if (max_abs(coeff) < 1e-12) return;
        dst = std::log(nm[b][static_cast<size_t>(k)] / nm[a][static_cast<size_t>(k)]) / lr;
        if (std::abs(dst - expect) >= 0.1)
          throw LeadingTermMismatch("leading exponent " + std::to_string(dst) + " differs from " + std::to_string(expect));
      };
      fit(tnorm, out.t_coeff[static_cast<size_t>(k)], out.t_expected[static_cast<size_t>(k)], out.t_fit[static_cast<size_t>(k)]);
      fit(mnorm, out.mu_coeff[static_cast<size_t>(k)], out.mu_expected[static_cast<size_t>(k)], out.mu_fit[static_cast<size_t>(k)]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elliptic systems from flat standard-form connections.

enum class PdeSystem { CoshGordon, Titeica, Toda };

inline std::string to_string(PdeSystem s) {
  switch (s) {
    case PdeSystem::CoshGordon: return "cosh-gordon";
    case PdeSystem::Titeica: return "titeica";
    case PdeSystem::Toda: return "toda";
  }
  return "";
}
inline PdeSystem parse_pde_system(const std::string& s) {
  if (s == "cosh-gordon" || s == "coshgordon") return PdeSystem::CoshGordon;
  if (s == "titeica") return PdeSystem::Titeica;
  if (s == "toda") return PdeSystem::Toda;
  throw std::invalid_argument("unknown system: " + s);
}

struct PdeFields {
  PdeSystem system = PdeSystem::CoshGordon;
  int n = 2;                 // matrix size; Toda carries n-1 fields
  std::vector<RField> phi;   // real potentials
  Field t;                   // t2 (cosh-Gordon) or t3 (Titeica); unused for Toda

  int fields() const { return system == PdeSystem::Toda ? n - 1 : 1; }
};

// Diagonal of A1 in the Toda form: traceless with a_{i+1} - a_i = d(phi_i).
inline std::vector<Field> toda_diagonal(const Patch& p, const std::vector<RField>& phi, int n) {
  std::vector<Field> a(static_cast<size_t>(n), p.zero());
  for (int i = 1; i <= n; ++i)
    for (int k = 1; k <= n - 1; ++k) {
      Field dphi = p.d(phi[static_cast<size_t>(k - 1)].cast<cplx>());
      double c = k < i ? double(k) / n : -double(n - k) / n;
      a[static_cast<size_t>(i - 1)] += c * dphi;
    }
  return a;
}

// The standard-form flat connection pair (A1(lambda), A2(lambda)).
inline std::pair<MatrixField, MatrixField> assemble_connection(const Patch& p, const PdeFields& F, cplx lambda = 1.0) {
  int n = F.n;
  MatrixField A1(n, p), A2(n, p);
  auto ex = [&](const RField& f, double s) { return Field((s * f).exp().cast<cplx>()); };
  switch (F.system) {
    case PdeSystem::CoshGordon: {
      Field phi = F.phi[0].cast<cplx>();
      Field dp = p.d(phi), dbp = p.db(phi);
      A1(0, 0) = -0.5 * dp;
      A1(0, 1) = F.t * ex(F.phi[0], -1);
      A1(1, 0) = lambda * ex(F.phi[0], 1);
      A1(1, 1) = 0.5 * dp;
      A2(0, 0) = 0.5 * dbp;
      A2(0, 1) = ex(F.phi[0], 1) / lambda;
      A2(1, 0) = -F.t.conjugate() * ex(F.phi[0], -1);
      A2(1, 1) = -0.5 * dbp;
      break;
    }
    case PdeSystem::Titeica: {
      Field phi = F.phi[0].cast<cplx>();
      Field dp = p.d(phi);
      Field c = ex(F.phi[0], 1), c0 = F.t * ex(F.phi[0], -2);
      A1(0, 0) = -dp;
      A1(0, 2) = c0;
      A1(1, 0) = lambda * c;
      A1(2, 1) = lambda * c;
      A1(2, 2) = dp;
      A2(0, 0) = A1(0, 0).conjugate() * -1.0;
      A2(0, 1) = c / lambda;
      A2(1, 2) = c / lambda;
      A2(2, 0) = -c0.conjugate();
      A2(2, 2) = A1(2, 2).conjugate() * -1.0;
      break;
    }
    case PdeSystem::Toda: {
      auto a = toda_diagonal(p, F.phi, n);
      for (int i = 0; i < n; ++i) {
        A1(i, i) = a[static_cast<size_t>(i)];
        A2(i, i) = -a[static_cast<size_t>(i)].conjugate();
      }
      for (int i = 0; i + 1 < n; ++i) {
        A1(i + 1, i) = lambda * ex(F.phi[static_cast<size_t>(i)], 1);
        A2(i, i + 1) = ex(F.phi[static_cast<size_t>(i)], 1) / lambda;
      }
      break;
    }
  }
  return {A1, A2};
}

// Scalar residuals with the patch derivatives:
//   cosh-Gordon  d dbar phi - e^{2phi} - |t2|^2 e^{-2phi}
//   Titeica      2 d dbar phi - e^{2phi} - |t3|^2 e^{-4phi}
//   Toda         2 d dbar phi_i - 2 e^{2phi_i} + e^{2phi_{i-1}} + e^{2phi_{i+1}}
inline std::vector<Field> scalar_residual(const Patch& p, const PdeFields& F) {
  std::vector<Field> out;
  auto ddb = [&](const RField& f) { return p.d(p.db(f.cast<cplx>())); };
  auto ex = [](const RField& f, double s) { return Field((s * f).exp().cast<cplx>()); };
  switch (F.system) {
    case PdeSystem::CoshGordon:
      out.push_back(ddb(F.phi[0]) - ex(F.phi[0], 2) - F.t.abs2() * ex(F.phi[0], -2));
      break;
    case PdeSystem::Titeica:
      out.push_back(2.0 * ddb(F.phi[0]) - ex(F.phi[0], 2) - F.t.abs2() * ex(F.phi[0], -4));
      break;
    case PdeSystem::Toda:
      for (int i = 0; i < F.n - 1; ++i) {
        Field r = 2.0 * ddb(F.phi[static_cast<size_t>(i)]) - 2.0 * ex(F.phi[static_cast<size_t>(i)], 2);
        if (i > 0) r += ex(F.phi[static_cast<size_t>(i - 1)], 2);
        if (i + 2 < F.n) r += ex(F.phi[static_cast<size_t>(i + 1)], 2);
        out.push_back(r);
      }
      break;
  }
  return out;
}

struct PdeResidual {
  std::vector<Field> scalar;
  double scalar_max = 0;
  double dbar_t_max = 0;
  double flatness_max = 0;
  // Pointwise constants of the two-sided bound
  //   flatness <= upper * (scalar + dbar t) and scalar + dbar t <= lower * flatness.
  double upper = 1, lower = 1;
  // Observed ratios flatness / (scalar + dbar t) and its inverse.
  double ratio_up = 0, ratio_down = 0;
  bool bound_holds = false;
};

// `margin` drops nodes next to a Dirichlet boundary from the maxima.
inline PdeResidual pde_residual(const Patch& p, const PdeFields& F, double slack = 1e-8, int margin = 0) {
  PdeResidual r;
  r.scalar = scalar_residual(p, F);
  for (auto& s : r.scalar) r.scalar_max = std::max(r.scalar_max, max_abs_interior(p, s, margin));
  if (F.system != PdeSystem::Toda) r.dbar_t_max = max_abs_interior(p, p.db(F.t), margin);
  auto [A1, A2] = assemble_connection(p, F);
  MatrixField Fc = curvature(p, A1, A2);
  for (auto& e : Fc.e) r.flatness_max = std::max(r.flatness_max, max_abs_interior(p, e, margin));
  double lo = F.phi[0].minCoeff(), hi = F.phi[0].maxCoeff();
  switch (F.system) {
    case PdeSystem::CoshGordon:
      r.upper = std::max(1.0, std::exp(-lo));
      r.lower = 1 + std::exp(hi);
      break;
    case PdeSystem::Titeica:
      r.upper = std::max(1.0, std::exp(-2 * lo));
      r.lower = 1 + std::exp(2 * hi);
      break;
    case PdeSystem::Toda:
      r.upper = F.n - 1;
      r.lower = 2;
      break;
  }
  double S = r.scalar_max + r.dbar_t_max;
  r.ratio_up = r.flatness_max / (S + slack);
  r.ratio_down = S / (r.flatness_max + slack);
  r.bound_holds = r.flatness_max <= r.upper * S + slack && S <= r.lower * r.flatness_max + slack;
  return r;
}

struct NewtonOptions {
  int max_iter = 60;
  double tol = 1e-10;
  int stall_limit = 20;
};

struct SolveResult {
  std::vector<RField> phi;
  int iterations = 0;
  double scalar_residual = 0;  // max-norm of the discrete equations
  std::vector<double> history;
  double flatness_residual = 0;
  double flatness_residual_interior = 0;
};

// Damped Newton on the 4th-order finite-difference discretization over a
// Dirichlet patch. `boundary[i]` supplies boundary values of field i and the
// initial guess inside. Armijo backtracking halves the step down to 2^-10.
inline SolveResult newton_solve(const Patch& p, const PdeFields& problem, const NewtonOptions& opt = {}) {
  if (p.is_periodic()) throw std::invalid_argument("newton_solve needs a Dirichlet patch");
  const int S = p.size(), I = S - 2, m = problem.fields();
  const int nint = I * I, nu = m * nint;
  const double h2 = 12 * p.h() * p.h();
  double kappa = problem.system == PdeSystem::CoshGordon ? 0.25 : 0.5;
  RField tt = problem.system == PdeSystem::Toda ? RField::Zero(S, S) : RField(problem.t.abs2());
  auto idx = [&](int f, int i, int j) { return f * nint + (i - 1) + (j - 1) * I; };

  std::vector<RField> phi = problem.phi;
  auto lap = [&](const RField& u, int i, int j) {
    double s = 0;
    for (auto [k, c] : gf_detail::fd2_stencil(i, S)) s += c * u(k, j);
    for (auto [k, c] : gf_detail::fd2_stencil(j, S)) s += c * u(i, k);
    return s / h2;
  };
  auto residual = [&](const std::vector<RField>& u) {
    Eigen::VectorXd F(nu);
    for (int j = 1; j <= I; ++j)
      for (int i = 1; i <= I; ++i)
        for (int f = 0; f < m; ++f) {
          double v = u[static_cast<size_t>(f)](i, j), g = 0;
          switch (problem.system) {
            case PdeSystem::CoshGordon: g = std::exp(2 * v) + tt(i, j) * std::exp(-2 * v); break;
            case PdeSystem::Titeica: g = std::exp(2 * v) + tt(i, j) * std::exp(-4 * v); break;
            case PdeSystem::Toda:
              g = 2 * std::exp(2 * v);
              if (f > 0) g -= std::exp(2 * u[static_cast<size_t>(f - 1)](i, j));
              if (f + 1 < m) g -= std::exp(2 * u[static_cast<size_t>(f + 1)](i, j));
              break;
          }
          F(idx(f, i, j)) = kappa * lap(u[static_cast<size_t>(f)], i, j) - g;
        }
    return F;
  };
  auto apply = [&](const std::vector<RField>& u, const Eigen::VectorXd& dx, double s) {
    std::vector<RField> r = u;
    for (int f = 0; f < m; ++f)
      for (int j = 1; j <= I; ++j)
        for (int i = 1; i <= I; ++i) r[static_cast<size_t>(f)](i, j) += s * dx(idx(f, i, j));
    return r;
  };

  SolveResult out;
  Eigen::VectorXd F = residual(phi);
  double norm = F.lpNorm<Eigen::Infinity>();
  out.history.push_back(norm);
  int stall = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (norm > opt.tol) {
    if (out.iterations >= opt.max_iter) throw SolverFailure("Newton iteration limit reached", out.history);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nu) * 12);
    for (int j = 1; j <= I; ++j)
      for (int i = 1; i <= I; ++i)
        for (int f = 0; f < m; ++f) {
          int row = idx(f, i, j);
          for (auto [k, c] : gf_detail::fd2_stencil(i, S))
            if (k >= 1 && k <= I) trip.emplace_back(row, idx(f, k, j), kappa * c / h2);
          for (auto [k, c] : gf_detail::fd2_stencil(j, S))
            if (k >= 1 && k <= I) trip.emplace_back(row, idx(f, i, k), kappa * c / h2);
          double v = phi[static_cast<size_t>(f)](i, j);
          switch (problem.system) {
            case PdeSystem::CoshGordon:
              trip.emplace_back(row, row, -2 * std::exp(2 * v) + 2 * tt(i, j) * std::exp(-2 * v));
              break;
            case PdeSystem::Titeica:
              trip.emplace_back(row, row, -2 * std::exp(2 * v) + 4 * tt(i, j) * std::exp(-4 * v));
              break;
            case PdeSystem::Toda:
              trip.emplace_back(row, row, -4 * std::exp(2 * v));
              if (f > 0) trip.emplace_back(row, idx(f - 1, i, j), 2 * std::exp(2 * phi[static_cast<size_t>(f - 1)](i, j)));
              if (f + 1 < m) trip.emplace_back(row, idx(f + 1, i, j), 2 * std::exp(2 * phi[static_cast<size_t>(f + 1)](i, j)));
              break;
          }
        }
    Eigen::SparseMatrix<double> J(nu, nu);
    J.setFromTriplets(trip.begin(), trip.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw SolverFailure("singular Newton matrix", out.history);
    Eigen::VectorXd dx = lu.solve(-F);
    double s = 1;
    std::vector<RField> trial;
    Eigen::VectorXd Ft;
    double nt = 0;
    for (;;) {
      trial = apply(phi, dx, s);
      Ft = residual(trial);
      nt = Ft.lpNorm<Eigen::Infinity>();
      if (nt <= (1 - 1e-4 * s) * norm || s <= std::ldexp(1.0, -10)) break;
      s *= 0.5;
    }
    stall = nt < norm ? 0 : stall + 1;
    phi = std::move(trial);
    F = std::move(Ft);
    norm = nt;
    ++out.iterations;
    out.history.push_back(norm);
    if (stall >= opt.stall_limit) throw SolverFailure("Newton stagnation", out.history);
  }
  out.phi = phi;
  out.scalar_residual = norm;
  PdeFields sol = problem;
  sol.phi = phi;
  out.flatness_residual = pde_residual(p, sol).flatness_max;
  out.flatness_residual_interior = pde_residual(p, sol, 1e-8, 2).flatness_max;
  return out;
}

// Radial solution of kappa Laplacian(phi) = g(phi) for constant |t|, started at
// phi(0) = phi0 and integrated with RK4; evaluated by Hermite interpolation.
class RadialProfile {
 public:
  RadialProfile(PdeSystem sys, double t_abs, double phi0, double r_max, double step = 1e-4) : dr_(step) {
    if (sys == PdeSystem::Toda) throw std::invalid_argument("RadialProfile: scalar systems only");
    double kappa = sys == PdeSystem::CoshGordon ? 0.25 : 0.5, w = sys == PdeSystem::CoshGordon ? -2 : -4;
    double t2 = t_abs * t_abs;
    auto g = [=](double v) { return (std::exp(2 * v) + t2 * std::exp(w * v)) / kappa; };
    int steps = static_cast<int>(std::ceil(r_max / step)) + 2;
    u_.resize(static_cast<size_t>(steps + 1));
    du_.resize(static_cast<size_t>(steps + 1));
    // Series start: phi = phi0 + g(phi0) r^2 / 4.
    u_[0] = phi0;
    du_[0] = 0;
    double r0 = step, c = g(phi0) / 4;
    double u = phi0 + c * r0 * r0, v = 2 * c * r0;
    u_[1] = u;
    du_[1] = v;
    auto rhs = [&](double r, double a, double b) { return std::pair<double, double>{b, g(a) - b / r}; };
    for (int k = 1; k < steps; ++k) {
      double r = k * step;
      auto [k1a, k1b] = rhs(r, u, v);
      auto [k2a, k2b] = rhs(r + step / 2, u + step / 2 * k1a, v + step / 2 * k1b);
      auto [k3a, k3b] = rhs(r + step / 2, u + step / 2 * k2a, v + step / 2 * k2b);
      auto [k4a, k4b] = rhs(r + step, u + step * k3a, v + step * k3b);
      u += step / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
      v += step / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
      u_[static_cast<size_t>(k + 1)] = u;
      du_[static_cast<size_t>(k + 1)] = v;
    }
  }
  double operator()(double r) const {
    size_t k = static_cast<size_t>(r / dr_);
    if (k + 1 >= u_.size()) throw std::out_of_range("RadialProfile: radius beyond integration range");
    double s = (r - k * dr_) / dr_, s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * u_[k] + (s3 - 2 * s2 + s) * dr_ * du_[k] + (-2 * s3 + 3 * s2) * u_[k + 1] +
           (s3 - s2) * dr_ * du_[k + 1];
  }

 private:
  double dr_;
  std::vector<double> u_, du_;
};

// ---------------------------------------------------------------------------
// Spectral sheets: roots of p^n = P(p) with pbar = Q(p) on each sheet.

struct SheetData {
  int n = 0;
  std::vector<Field> p, q;  // sheet values and pbar = Q(p)
  Eigen::ArrayXXi mask;     // 1 where the sheets come closer than the tolerance
  int masked = 0;
  // max over sheets and unmasked nodes of |F_p (d q - dbar p)|, the Poisson
  // bracket {-p^n + P, -pbar + Q} restricted to the curve.
  double residual = 0;
  double raw_residual = 0;  // max |d q - dbar p|
};

// mu[k] for k = 2..n, t[k] for k = 2..n. mu_1 is the reduced value
// -sum_{k=2}^{n-1} (k/n) t_k mu_{k+1}.
inline SheetData spectral_sheets(const Patch& pt, const std::vector<Field>& mu, const std::vector<Field>& t, int n,
                                 double sep_tol = 1e-6, int margin = 2) {
  int S = pt.size();
  auto T = [&](int k) { return k < static_cast<int>(t.size()) ? t[static_cast<size_t>(k)] : pt.zero(); };
  auto Mu = [&](int k) { return k < static_cast<int>(mu.size()) ? mu[static_cast<size_t>(k)] : pt.zero(); };
  Field mu1 = pt.zero();
  for (int k = 2; k <= n - 1; ++k) mu1 -= (double(k) / n) * T(k) * Mu(k + 1);
  SheetData out;
  out.n = n;
  out.p.assign(static_cast<size_t>(n), pt.zero());
  out.q.assign(static_cast<size_t>(n), pt.zero());
  out.mask = Eigen::ArrayXXi::Zero(S, S);
  double tmax = 0;
  for (int k = 2; k <= n; ++k) tmax = std::max(tmax, max_abs(T(k)));
  if (tmax == 0) {
    for (int j = 0; j < n; ++j) out.q[static_cast<size_t>(j)] = mu1;
    return out;
  }
  auto roots_at = [&](int a, int b) {
    std::vector<cplx> c(static_cast<size_t>(n + 1));
    c[static_cast<size_t>(n)] = 1;
    for (int k = 2; k <= n; ++k) c[static_cast<size_t>(n - k)] = -T(k)(a, b);
    return roots_numeric(c);
  };
  // Continue sheet labels from the previous node by the closest permutation.
  auto match = [&](const std::vector<cplx>& prev, std::vector<cplx> cur) {
    std::vector<int> perm(static_cast<size_t>(n)), best;
    std::iota(perm.begin(), perm.end(), 0);
    double bd = std::numeric_limits<double>::infinity();
    do {
      double dsum = 0;
      for (int j = 0; j < n; ++j) dsum += std::abs(cur[static_cast<size_t>(perm[static_cast<size_t>(j)])] - prev[static_cast<size_t>(j)]);
      if (dsum < bd) {
        bd = dsum;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<cplx> r(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) r[static_cast<size_t>(j)] = cur[static_cast<size_t>(best[static_cast<size_t>(j)])];
    return r;
  };
  auto store = [&](int a, int b, const std::vector<cplx>& r) {
    double sep = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      out.p[static_cast<size_t>(i)](a, b) = r[static_cast<size_t>(i)];
      for (int j = i + 1; j < n; ++j) sep = std::min(sep, std::abs(r[static_cast<size_t>(i)] - r[static_cast<size_t>(j)]));
    }
    if (sep < sep_tol) out.mask(a, b) = 1;
  };
  std::vector<cplx> prev = roots_at(0, 0);
  store(0, 0, prev);
  std::vector<std::vector<cplx>> col0(static_cast<size_t>(S));
  col0[0] = prev;
  for (int a = 1; a < S; ++a) {
    col0[static_cast<size_t>(a)] = match(col0[static_cast<size_t>(a - 1)], roots_at(a, 0));
    store(a, 0, col0[static_cast<size_t>(a)]);
  }
  for (int a = 0; a < S; ++a) {
    prev = col0[static_cast<size_t>(a)];
    for (int b = 1; b < S; ++b) {
      prev = match(prev, roots_at(a, b));
      store(a, b, prev);
    }
  }
  out.masked = out.mask.sum();
  // Nodes within 3 of a masked node are excluded from the residual.
  Eigen::ArrayXXi excl = out.mask;
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a)
      if (out.mask(a, b))
        for (int db = -3; db <= 3; ++db)
          for (int da = -3; da <= 3; ++da) {
            int x = a + da, y = b + db;
            if (x >= 0 && y >= 0 && x < S && y < S) excl(x, y) = 1;
          }
  for (int j = 0; j < n; ++j) {
    const Field& pj = out.p[static_cast<size_t>(j)];
    Field q = mu1, pw = pt.constant(1);
    for (int k = 2; k <= n; ++k) {
      pw = pw * pj;
      q += Mu(k) * pw;
    }
    out.q[static_cast<size_t>(j)] = q;
    Field r = pt.d(q) - pt.db(pj);
    // F = -p^n + sum t_k p^(n-k), F_p = -n p^(n-1) + sum (n-k) t_k p^(n-k-1).
    Field Fp = -double(n) * pj.pow(n - 1);
    for (int k = 2; k < n; ++k) Fp += double(n - k) * T(k) * pj.pow(n - k - 1);
    Field w = Fp * r;
    int lo = pt.is_periodic() ? 0 : margin, hi = pt.is_periodic() ? S : S - margin;
    for (int b = lo; b < hi; ++b)
      for (int a = lo; a < hi; ++a) {
        if (excl(a, b)) continue;
        out.residual = std::max(out.residual, std::abs(w(a, b)));
        out.raw_residual = std::max(out.raw_residual, std::abs(r(a, b)));
      }
  }
  return out;
}

// Slope of log(residual) against log(eps) between two samples.
inline double fit_order(double eps1, double res1, double eps2, double res2) {
  return std::log(res1 / res2) / std::log(eps1 / eps2);
}

// ---------------------------------------------------------------------------
// Local trivialization step: v with dbar v = -mu on a periodic patch.

struct TrivializeResult {
  Field v;
  double residual = 0;  // max |dbar v + mu|
  cplx mean = 0;        // mean of mu, absorbed by a -mean * (zbar - zbar_c) term
  Field mu_after;       // mu + dbar v, the field after the linear flow
};

// `band` is the fraction of the side near the edge where mu must vanish.
inline TrivializeResult trivialize_step(const Patch& p, const Field& mu, double band = 0.1, double support_tol = 1e-10) {
  if (!p.is_periodic()) throw std::invalid_argument("trivialize_step needs a periodic patch");
  int S = p.size(), w = std::max(1, static_cast<int>(band * S));
  auto in_band = [&](int a, int b) { return a < w || b < w || a >= S - w || b >= S - w; };
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a)
      if (in_band(a, b) && std::abs(mu(a, b)) > support_tol)
        throw SupportError("mu is not compactly supported inside the patch");
  TrivializeResult out;
  out.mean = mu.mean();
  Field rest = mu - out.mean;
  Field v = -p.db_inverse(rest);
  double c = p.L() / 2;
  Field lin = p.sample([&](cplx z) { return std::conj(z - cplx(c, c)); });
  v -= out.mean * lin;
  // Normalize so v averages to zero over the edge band.
  cplx avg = 0;
  int cnt = 0;
  for (int b = 0; b < S; ++b)
    for (int a = 0; a < S; ++a)
      if (in_band(a, b)) {
        avg += v(a, b);
        ++cnt;
      }
  v -= avg / double(cnt);
  // dbar of the linear term is exactly 1.
  Field dbv = p.db(v + out.mean * lin) - out.mean;
  out.mu_after = mu + dbv;
  out.residual = max_abs(out.mu_after);
  out.v = v;
  return out;
}

// ---------------------------------------------------------------------------
// Field files: a JSON header line followed by CSV rows x,y,re,im,... in
// row-major node order.

inline void write_fields_csv(std::ostream& os, const Patch& p, int n, const std::vector<std::pair<std::string, Field>>& fields,
                             bool header_line = true) {
  if (header_line) {
    nlohmann::json h = p.header(n);
    std::vector<std::string> names;
    for (auto& f : fields) names.push_back(f.first);
    h["fields"] = names;
    os << "# " << h.dump() << "\n";
  }
  os << "x,y";
  for (auto& f : fields) os << "," << f.first << "_re," << f.first << "_im";
  os << "\n";
  os.precision(17);
  for (int j = 0; j < p.size(); ++j)
    for (int i = 0; i < p.size(); ++i) {
      os << p.coord(i) << "," << p.coord(j);
      for (auto& f : fields) os << "," << f.second(i, j).real() << "," << f.second(i, j).imag();
      os << "\n";
    }
}

struct FieldFile {
  nlohmann::json header;
  Patch patch;
  std::vector<std::pair<std::string, Field>> fields;

  const Field& get(const std::string& name) const {
    for (auto& f : fields)
      if (f.first == name) return f.second;
    throw std::invalid_argument("field file: no field named " + name);
  }
  bool has(const std::string& name) const {
    for (auto& f : fields)
      if (f.first == name) return true;
    return false;
  }
};

// Reads the format written by write_fields_csv. The header line fixes the grid.
inline FieldFile read_fields_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw std::invalid_argument("field file: missing header line");
  FieldFile ff{nlohmann::json::parse(line.substr(2)), Patch::periodic(4), {}};
  int N = ff.header.at("N").get<int>();
  double L = ff.header.at("L").get<double>();
  ff.patch = ff.header.at("geometry").get<std::string>() == "periodic" ? Patch::periodic(N, L) : Patch::dirichlet(N, L);
  for (auto& name : ff.header.at("fields")) ff.fields.push_back({name.get<std::string>(), ff.patch.zero()});
  if (!std::getline(is, line)) throw std::invalid_argument("field file: missing column line");
  int S = ff.patch.size();
  size_t cols = 2 + 2 * ff.fields.size();
  for (int node = 0; node < S * S; ++node) {
    if (!std::getline(is, line)) throw std::invalid_argument("field file: expected " + std::to_string(S * S) + " rows");
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != cols) throw std::invalid_argument("field file: row " + std::to_string(node) + " has wrong width");
    int i = node % S, j = node / S;
    for (size_t f = 0; f < ff.fields.size(); ++f) ff.fields[f].second(i, j) = cplx(v[2 + 2 * f], v[3 + 2 * f]);
  }
  return ff;
}

}  // namespace hcs
