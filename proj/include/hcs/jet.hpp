#pragma once

#include <map>
#include <string>

#include "mpoly.hpp"

namespace hcs {

// First-order jet over MPoly: body + sum of soul[g] * g with g nilpotent
// generators whose pairwise products vanish.
struct Jet1 {
  MPoly body;
  std::map<int, MPoly> soul;

  Jet1() = default;
  Jet1(int c) : body(c) {}
  Jet1(const MPoly& b) : body(b) {}
  Jet1(const GaussRat& c) : body(c) {}

  static Jet1 generator(int g) {
    Jet1 j;
    j.soul[g] = MPoly(1);
    return j;
  }

  // Splits a polynomial linear-or-less in the marked generators; higher terms are dropped.
  static Jet1 from_poly(const MPoly& p, const std::function<bool(int)>& is_gen) {
    Jet1 j;
    for (auto& [m, c] : p.terms()) {
      int deg = 0, g = -1;
      Mono rest;
      for (auto& [v, e] : m) {
        if (is_gen(v)) { deg += e; g = v; }
        else rest.emplace_back(v, e);
      }
      if (deg == 0) j.body.add_term(m, c);
      else if (deg == 1) j.soul[g].add_term(rest, c);
    }
    j.prune();
    return j;
  }
  MPoly to_poly() const {
    MPoly r = body;
    for (auto& [g, c] : soul) r += c * MPoly::var(g);
    return r;
  }

  bool is_zero() const { return body.is_zero() && soul.empty(); }
  void prune() {
    for (auto it = soul.begin(); it != soul.end();)
      it = it->second.is_zero() ? soul.erase(it) : std::next(it);
  }

  Jet1 operator-() const {
    Jet1 r;
    r.body = -body;
    for (auto& [g, c] : soul) r.soul[g] = -c;
    return r;
  }
  Jet1& operator+=(const Jet1& o) {
    body += o.body;
    for (auto& [g, c] : o.soul) soul[g] += c;
    prune();
    return *this;
  }
  Jet1& operator-=(const Jet1& o) { return *this += -o; }
  friend Jet1 operator+(Jet1 a, const Jet1& b) { return a += b; }
  friend Jet1 operator-(Jet1 a, const Jet1& b) { return a -= b; }
  friend Jet1 operator*(const Jet1& a, const Jet1& b) {
    Jet1 r;
    r.body = a.body * b.body;
    for (auto& [g, c] : a.soul) r.soul[g] += c * b.body;
    for (auto& [g, c] : b.soul) r.soul[g] += a.body * c;
    r.prune();
    return r;
  }
  Jet1& operator*=(const Jet1& o) { return *this = *this * o; }
  friend bool operator==(const Jet1& a, const Jet1& b) { return a.body == b.body && a.soul == b.soul; }
  friend bool operator!=(const Jet1& a, const Jet1& b) { return !(a == b); }
};

inline bool is_zero_s(const Jet1& j) { return j.is_zero(); }

// Numeric first-order jet a + eps*b with a single real infinitesimal eps,
// so that conjugation acts componentwise.
template <class S>
struct Jet {
  S body{}, soul{};

  Jet() = default;
  Jet(S b) : body(b), soul{} {}
  Jet(S b, S s) : body(b), soul(s) {}
  Jet(int c) : body(S(c)), soul{} {}

  Jet operator-() const { return {-body, -soul}; }
  Jet& operator+=(const Jet& o) { body += o.body; soul += o.soul; return *this; }
  Jet& operator-=(const Jet& o) { body -= o.body; soul -= o.soul; return *this; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) { return {a.body * b.body, a.body * b.soul + a.soul * b.body}; }
  friend Jet operator/(const Jet& a, const Jet& b) {
    S ib = S(1) / b.body;
    return {a.body * ib, (a.soul * b.body - a.body * b.soul) * ib * ib};
  }
  friend bool operator==(const Jet& a, const Jet& b) { return a.body == b.body && a.soul == b.soul; }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }
};

template <class S>
Jet<S> conj_s(const Jet<S>& j) { return {conj_s(j.body), conj_s(j.soul)}; }
template <class S>
bool is_zero_s(const Jet<S>& j) { return is_zero_s(j.body) && is_zero_s(j.soul); }

using CJet = Jet<cplx>;
using QJet = Jet<GaussRat>;

}  // namespace hcs
