#include <gtest/gtest.h>

#include <random>

#include "hcs/diffpois.hpp"
#include "hcs/gl2action.hpp"

using namespace hcs;

namespace {

double dist(const JetPoint& p, const JetPoint& q) {
  double d = 0;
  for (int k = 2; k <= p.n; ++k) {
    d = std::max(d, std::abs(p.mu[static_cast<size_t>(k)] - q.mu[static_cast<size_t>(k)]));
    d = std::max(d, std::abs(p.t[static_cast<size_t>(k)] - q.t[static_cast<size_t>(k)]));
  }
  return d;
}

JetPoint random_point(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  JetPoint p = JetPoint::make(n);
  for (int k = 2; k <= n; ++k) {
    p.mu[static_cast<size_t>(k)] = 0.4 * cplx(u(rng), u(rng));
    p.t[static_cast<size_t>(k)] = cplx(u(rng), u(rng));
  }
  // Keep t_n near the positive axis so m_2 stays inside the principal sector.
  p.t[static_cast<size_t>(n)] = std::polar(0.5 + 0.5 * std::abs(u(rng)), 0.3 * u(rng));
  return p;
}

GL2Elem random_near_identity(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return {cplx(1 + 0.2 * u(rng), 0.2 * u(rng)), 0.2 * cplx(u(rng), u(rng))};
}

}  // namespace

TEST(GL2Elem, RealMatrixCorrespondenceIsHomomorphism) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    double A = u(rng), B = u(rng), C = u(rng), D = u(rng), E = u(rng), F = u(rng), G = u(rng), H = u(rng);
    GL2Elem g = GL2Elem::from_real(A, B, C, D), h = GL2Elem::from_real(E, F, G, H);
    GL2Elem gh = GL2Elem::from_real(A * E + B * G, A * F + B * H, C * E + D * G, C * F + D * H);
    GL2Elem prod = g * h;
    EXPECT_LT(std::abs(prod.a - gh.a) + std::abs(prod.b - gh.b), 1e-12);
    EXPECT_NEAR(g.det(), A * D - B * C, 1e-12);
  }
  // Oracle: z = X + iY maps to a z + b zbar, b = conj of the light-cone entry.
  GL2Elem refl = GL2Elem::from_real(1, 0, 0, -1);
  EXPECT_EQ(refl.a, cplx(0));
  EXPECT_EQ(refl.b, cplx(1));
}

TEST(MbarCoeffs, Examples) {
  std::vector<cplx> t{0, 0, cplx(2.5)};
  EXPECT_LT(std::abs(mbar_coeffs(t, 2)[2] - 1.0), 1e-15);
  std::vector<cplx> ti{0, 0, cplx(0, 1)};
  EXPECT_LT(std::abs(mbar_coeffs(ti, 2)[2] - cplx(0, 1)), 1e-15);
  EXPECT_THROW(mbar_coeffs(std::vector<cplx>(3, 0.0), 2), ChartBoundary);
}

TEST(MbarCoeffs, CertificateOnRandomPoints) {
  std::mt19937 rng(7);
  for (int n = 2; n <= 5; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_point(rng, n);
      auto m = mbar_coeffs(p.t, n);
      auto back = conj_t_formula<cplx>(m, p.t, n);
      for (int k = 2; k <= n; ++k) EXPECT_LT(std::abs(back[static_cast<size_t>(k)] - std::conj(p.t[static_cast<size_t>(k)])), 1e-10);
    }
}

TEST(Act, IdentityFixesPoints) {
  std::mt19937 rng(9);
  for (int n = 2; n <= 4; ++n) {
    auto p = random_point(rng, n);
    EXPECT_LT(dist(act(GL2Elem::identity(), p), p), 1e-13);
  }
}

TEST(Act, NEqualsTwoClosedForm) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_point(rng, 2);
    GL2Elem g = random_near_identity(rng);
    cplx m2 = std::sqrt(std::conj(p.t[2]) / p.t[2]);
    cplx s = g.a + std::conj(g.b) * std::conj(p.mu[2]) * m2;
    auto q = act(g, p);
    EXPECT_LT(std::abs(q.t[2] - s * s * p.t[2]), 1e-12);
    EXPECT_LT(std::abs(q.mu[2] - (g.a * p.mu[2] + std::conj(g.b) * m2) / s), 1e-12);
  }
}

TEST(Act, TopCoefficientAndMu2AllN) {
  std::mt19937 rng(17);
  for (int n = 2; n <= 5; ++n)
    for (int trial = 0; trial < 10; ++trial) {
      auto p = random_point(rng, n);
      GL2Elem g = random_near_identity(rng);
      cplx m2 = mbar_coeffs(p.t, n)[2];
      cplx s = g.a + std::conj(g.b) * std::conj(p.mu[2]) * m2;
      auto q = act(g, p);
      EXPECT_LT(std::abs(q.t[static_cast<size_t>(n)] - std::pow(s, n) * p.t[static_cast<size_t>(n)]), 1e-11);
      EXPECT_LT(std::abs(q.mu[2] - (g.a * p.mu[2] + std::conj(g.b) * m2) / s), 1e-12);
    }
}

TEST(Act, ScalingSubgroup) {
  // x' = lambda x, y' = lambda y: t_k' = lambda^k t_k and mu_k' = lambda^(2-k) mu_k.
  std::mt19937 rng(19);
  for (int n = 2; n <= 4; ++n) {
    auto p = random_point(rng, n);
    double lam = 1.7;
    auto q = act(GL2Elem{cplx(lam), 0}, p);
    for (int k = 2; k <= n; ++k) {
      EXPECT_LT(std::abs(q.t[static_cast<size_t>(k)] - std::pow(lam, k) * p.t[static_cast<size_t>(k)]), 1e-12);
      EXPECT_LT(std::abs(q.mu[static_cast<size_t>(k)] - std::pow(lam, 2 - k) * p.mu[static_cast<size_t>(k)]), 1e-12);
    }
  }
}

TEST(Act, GroupLaw) {
  std::mt19937 rng(23);
  for (int n = 2; n <= 4; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      auto p = random_point(rng, n);
      GL2Elem g = random_near_identity(rng), h = random_near_identity(rng);
      double d = dist(act(g * h, p), act(g, act(h, p)));
      EXPECT_LT(d, 1e-8) << "n=" << n << " trial " << trial;
    }
}

TEST(JetPoint, JsonRoundTrip) {
  std::mt19937 rng(29);
  auto p = random_point(rng, 3);
  auto q = JetPoint::from_json(p.to_json());
  EXPECT_EQ(dist(p, q), 0);
}

TEST(Act, CommutesWithHamiltonianFlowOnFiberCoordinates) {
  // The linear map (x, ybar) -> (a x + conj(b) ybar, ...) commutes with x -> x + eps {H, x}.
  MPoly H = MPoly::parse("w1*p^2 + w2*p*pb + w3*pb^3");
  MPoly a(GaussRat(mpq_class(3, 2), mpq_class(1))), bc(GaussRat(mpq_class(-1, 3), mpq_class(2)));
  MPoly x = MPoly::var("p"), yb = MPoly::var("pb");
  EXPECT_EQ(poisson(H, a * x + bc * yb), a * poisson(H, x) + bc * poisson(H, yb));
}
