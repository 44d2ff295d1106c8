#include <gtest/gtest.h>

#include <random>

#include "hcs/jet.hpp"
#include "hcs/linalg.hpp"
#include "hcs/localized.hpp"
#include "hcs/mpoly.hpp"
#include "hcs/roots.hpp"

using namespace hcs;

namespace {

MPoly P(const std::string& s) { return MPoly::parse(s); }

MPoly random_poly(std::mt19937& rng, const std::vector<std::string>& vars, int terms, int maxdeg) {
  std::uniform_int_distribution<int> c(-5, 5), e(0, maxdeg), vi(0, static_cast<int>(vars.size()) - 1);
  MPoly r;
  for (int k = 0; k < terms; ++k) {
    MPoly t(GaussRat(mpq_class(c(rng)), mpq_class(c(rng))));
    for (int j = 0; j < 2; ++j) t = t * MPoly::var(vars[static_cast<size_t>(vi(rng))], e(rng));
    r += t;
  }
  return r;
}

}  // namespace

TEST(GaussRat, ExactFieldOps) {
  GaussRat a(mpq_class(1, 2), mpq_class(3)), b(mpq_class(-2), mpq_class(1, 3));
  EXPECT_EQ((a * b) / b, a);
  EXPECT_EQ(a - a, GaussRat(0));
  EXPECT_EQ(GaussRat::i() * GaussRat::i(), GaussRat(-1));
  EXPECT_EQ(GaussRat::frac(4, -6).re, mpq_class(-2, 3));
  EXPECT_THROW(a / GaussRat(0), std::domain_error);
}

TEST(MPoly, RingAxiomsRandomized) {
  std::mt19937 rng(11);
  std::vector<std::string> vs{"a", "b", "c"};
  for (int trial = 0; trial < 30; ++trial) {
    MPoly f = random_poly(rng, vs, 4, 3), g = random_poly(rng, vs, 4, 3), h = random_poly(rng, vs, 3, 2);
    EXPECT_EQ(f + g, g + f);
    EXPECT_EQ(f * g, g * f);
    EXPECT_EQ((f * g) * h, f * (g * h));
    EXPECT_EQ(f * (g + h), f * g + f * h);
    if (!f.is_zero() && !g.is_zero()) EXPECT_EQ((f * g).total_degree(), f.total_degree() + g.total_degree());
    auto q = (f * g).divide(g);
    if (!g.is_zero()) {
      ASSERT_TRUE(q.has_value());
      EXPECT_EQ(*q, f);
    }
  }
}

TEST(MPoly, TextAndJsonRoundTrip) {
  MPoly f = P("3/2*a^2*b - i*c + 7 - (1+2*i)*a*c^3");
  EXPECT_EQ(MPoly::parse(f.to_string()), f);
  EXPECT_EQ(MPoly::from_json(f.to_json()), f);
  EXPECT_EQ(P("(a+b)^2"), P("a^2 + 2*a*b + b^2"));
}

TEST(MPoly, DerivationLeibniz) {
  MPoly f = P("mu2*t2^2 + mu3"), g = P("t2*mu3 - 4*mu2");
  EXPECT_EQ((f * g).d(), f.d() * g + f * g.d());
  EXPECT_EQ((f * g).db(), f.db() * g + f * g.db());
  EXPECT_EQ(f.d().db(), f.db().d());
  EXPECT_TRUE(P("p^3 + x").d().is_zero());
}

TEST(Jet1, ProductRule) {
  int t2 = var_id("t2"), t3 = var_id("t3");
  MPoly a = P("mu2 + 1"), c = P("mu3"), b2 = P("mu2^2"), b3 = P("2"), d2 = P("mu4"), d3 = P("-mu2");
  Jet1 u(a), v(c);
  u.soul[t2] = b2;
  u.soul[t3] = b3;
  v.soul[t2] = d2;
  v.soul[t3] = d3;
  Jet1 w = u * v;
  EXPECT_EQ(w.body, a * c);
  EXPECT_EQ(w.soul[t2], a * d2 + c * b2);
  EXPECT_EQ(w.soul[t3], a * d3 + c * b3);
  EXPECT_TRUE((Jet1::generator(t2) * Jet1::generator(t3)).is_zero());
  // Ring axioms on the truncation.
  Jet1 z(P("mu5"));
  z.soul[t3] = P("mu2*mu5");
  EXPECT_EQ((u * v) * z, u * (v * z));
  EXPECT_EQ(u * (v + z), u * v + u * z);
}

TEST(Localized, NormalizesUnitPowers) {
  int m = var_id("mub2");
  Localized a(P("mub2^2*mub3"), m, 3);
  EXPECT_EQ(a.pow(), 1);
  EXPECT_EQ(a.num(), P("mub3"));
  Localized inv = Localized::unit_inverse(m);
  EXPECT_EQ(inv * Localized(MPoly::var(m), m), Localized(1));
}

TEST(Determinant, Examples) {
  EXPECT_EQ(det_fraction_free(QMat::identity(5)), GaussRat(1));
  PMat m{{MPoly(0), P("t2")}, {MPoly(1), P("t1")}};
  EXPECT_EQ(det_fraction_free(m), P("-t2"));
}

TEST(Determinant, BareissMatchesLeibnizSymbolic) {
  std::mt19937 rng(5);
  std::vector<std::string> vs{"a", "b"};
  for (int trial = 0; trial < 5; ++trial) {
    PMat m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = random_poly(rng, vs, 2, 1);
    MPoly ref = det_leibniz(m);
    EXPECT_EQ(det_bareiss(m), ref);
    EXPECT_EQ(det_laplace(m), ref);
  }
}

TEST(Resultant, Examples) {
  UPoly<GaussRat> f{GaussRat(-1), GaussRat(0), GaussRat(1)}, g{GaussRat(-1), GaussRat(1)};
  EXPECT_EQ(resultant(f, g), GaussRat(0));
  UPoly<GaussRat> f2{GaussRat(1), GaussRat(0), GaussRat(1)}, g2{GaussRat(1), GaussRat(1)};
  // Oracle: res(f, x + 1) = (-1)^deg f * f(-1) for monic linear g.
  EXPECT_EQ(resultant(f2, g2), GaussRat(2));
  EXPECT_EQ(det_bareiss(sylvester(f2, g2)), GaussRat(2));
  EXPECT_THROW(resultant(UPoly<GaussRat>{GaussRat(0)}, UPoly<GaussRat>{GaussRat(0)}), std::invalid_argument);
}

TEST(Resultant, AntisymmetryRandomized) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> c(-4, 4), deg(1, 4);
  for (int trial = 0; trial < 40; ++trial) {
    UPoly<GaussRat> f, g;
    int df = deg(rng), dg = deg(rng);
    for (int k = 0; k <= df; ++k) f.push_back(GaussRat(mpq_class(c(rng)), mpq_class(c(rng))));
    for (int k = 0; k <= dg; ++k) g.push_back(GaussRat(mpq_class(c(rng)), mpq_class(c(rng))));
    f.back() = GaussRat(1);
    g.back() = GaussRat(2);
    GaussRat s = ((df * dg) % 2) ? GaussRat(-1) : GaussRat(1);
    EXPECT_EQ(resultant(f, g), s * resultant(g, f));
  }
}

TEST(Resultant, SymbolicEliminationDegree) {
  // Eliminating x between x^2 - t and w - (a x + b y(x)) gives a degree-2 polynomial in w.
  int x = var_id("x");
  MPoly f = P("x^2 - t"), g = P("w - a*x - b*m*x");
  MPoly r = resultant(f.as_univariate(x), g.as_univariate(x));
  EXPECT_EQ(r.degree(var_id("w")), 2);
}

TEST(Nullspace, Examples) {
  EXPECT_EQ(nullspace_exact(QMat(3, 3)).size(), 3u);
  EXPECT_TRUE(nullspace_exact(QMat::identity(4)).empty());
  QMat m{{GaussRat(1), GaussRat(2), GaussRat(3)}, {GaussRat(2), GaussRat(4), GaussRat(6)}};
  auto ns = nullspace_exact(m);
  ASSERT_EQ(ns.size(), 2u);
  for (auto& v : ns) {
    auto r = m * v;
    for (auto& x : r) EXPECT_TRUE(x.is_zero());
  }
}

TEST(Inverse, UnitPivotPolynomial) {
  PMat m{{P("1"), P("a"), P("b")}, {P("0"), P("1"), P("c")}, {P("0"), P("0"), P("1")}};
  PMat inv = inverse_unit_pivot(m);
  EXPECT_EQ(m * inv, PMat::identity(3));
}

TEST(Charpoly, FaddeevLeVerrier) {
  QMat m{{GaussRat(0), GaussRat(6)}, {GaussRat(1), GaussRat(1)}};
  auto c = charpoly(m);
  EXPECT_EQ(c[0], GaussRat(-6));
  EXPECT_EQ(c[1], GaussRat(-1));
  EXPECT_EQ(c[2], GaussRat(1));
}

TEST(Roots, Examples) {
  auto r = roots_numeric({-1, 0, 1});
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  EXPECT_NEAR(std::abs(r[0] + 1.0), 0, 1e-12);
  EXPECT_NEAR(std::abs(r[1] - 1.0), 0, 1e-12);
  auto z = roots_numeric({0, 0, 0, 0, 1});
  for (auto& x : z) EXPECT_EQ(x, cplx(0));
  auto t = roots_numeric({-6, 11, -6, 1});
  std::sort(t.begin(), t.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(std::abs(t[static_cast<size_t>(k)] - cplx(k + 1)), 0, 1e-10);
}

TEST(Roots, MonicReconstructionRandomized) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int deg = 1; deg <= 12; ++deg) {
    std::vector<cplx> rts;
    // Separated roots: jittered points on distinct radii.
    for (int k = 0; k < deg; ++k) rts.push_back(std::polar(0.5 + 0.1 * k, u(rng) * M_PI) + cplx(0.05 * u(rng)));
    auto c = poly_from_roots(rts);
    auto found = roots_numeric(c);
    auto c2 = poly_from_roots(found);
    double scale = coeff_norm(c);
    for (size_t k = 0; k < c.size(); ++k) EXPECT_LE(std::abs(c[k] - c2[k]), 1e-8 * scale) << "deg " << deg;
  }
}
