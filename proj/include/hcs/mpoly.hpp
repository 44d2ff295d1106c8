#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scalar.hpp"
#include "vars.hpp"

namespace hcs {

// Sparse monomial: (variable id, exponent) pairs sorted by id, exponents > 0.
using Mono = std::vector<std::pair<int, int>>;

inline Mono mono_mul(const Mono& a, const Mono& b) {
  Mono r;
  r.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      r.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      r.push_back(b[j++]);
    } else {
      r.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return r;
}

inline int mono_deg(const Mono& m) {
  int d = 0;
  for (auto& [v, e] : m) d += e;
  return d;
}

inline int mono_exp(const Mono& m, int var) {
  for (auto& [v, e] : m)
    if (v == var) return e;
  return 0;
}

// Graded lexicographic comparison, used for exact division.
inline bool mono_grlex_less(const Mono& a, const Mono& b) {
  int da = mono_deg(a), db = mono_deg(b);
  if (da != db) return da < db;
  size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    int va = i < a.size() ? a[i].first : INT32_MAX;
    int vb = j < b.size() ? b[j].first : INT32_MAX;
    int v = std::min(va, vb);
    int ea = va == v ? a[i].second : 0;
    int eb = vb == v ? b[j].second : 0;
    if (ea != eb) return ea < eb;
    if (va == v) ++i;
    if (vb == v) ++j;
  }
  return false;
}

// a / b if b divides a.
inline std::optional<Mono> mono_div(const Mono& a, const Mono& b) {
  Mono r;
  size_t i = 0;
  for (auto& [v, e] : b) {
    while (i < a.size() && a[i].first < v) r.push_back(a[i++]);
    if (i == a.size() || a[i].first != v || a[i].second < e) return std::nullopt;
    if (a[i].second > e) r.emplace_back(v, a[i].second - e);
    ++i;
  }
  while (i < a.size()) r.push_back(a[i++]);
  return r;
}

class MPoly {
 public:
  using Terms = std::map<Mono, GaussRat>;

  MPoly() = default;
  MPoly(int c) { if (c != 0) t_[{}] = GaussRat(c); }
  MPoly(const GaussRat& c) { if (!c.is_zero()) t_[{}] = c; }

  static MPoly var(int id, int e = 1) {
    MPoly p;
    if (e == 0) p.t_[{}] = GaussRat(1);
    else p.t_[{{id, e}}] = GaussRat(1);
    return p;
  }
  static MPoly var(const std::string& name, int e = 1) { return var(var_id(name), e); }
  static MPoly term(const GaussRat& c, Mono m) {
    MPoly p;
    if (!c.is_zero()) p.t_[std::move(m)] = c;
    return p;
  }

  const Terms& terms() const { return t_; }
  bool is_zero() const { return t_.empty(); }
  size_t size() const { return t_.size(); }
  bool is_constant() const { return t_.empty() || (t_.size() == 1 && t_.begin()->first.empty()); }
  GaussRat constant_term() const {
    auto it = t_.find(Mono{});
    return it == t_.end() ? GaussRat(0) : it->second;
  }

  void add_term(const Mono& m, const GaussRat& c) {
    if (c.is_zero()) return;
    auto [it, ins] = t_.emplace(m, c);
    if (!ins) {
      it->second += c;
      if (it->second.is_zero()) t_.erase(it);
    }
  }

  MPoly operator-() const {
    MPoly r = *this;
    for (auto& [m, c] : r.t_) c = -c;
    return r;
  }
  MPoly& operator+=(const MPoly& o) {
    for (auto& [m, c] : o.t_) add_term(m, c);
    return *this;
  }
  MPoly& operator-=(const MPoly& o) {
    for (auto& [m, c] : o.t_) add_term(m, -c);
    return *this;
  }
  MPoly& operator*=(const MPoly& o) { return *this = *this * o; }
  MPoly& operator*=(const GaussRat& s) {
    if (s.is_zero()) { t_.clear(); return *this; }
    for (auto& [m, c] : t_) c *= s;
    return *this;
  }

  friend MPoly operator+(MPoly a, const MPoly& b) { return a += b; }
  friend MPoly operator-(MPoly a, const MPoly& b) { return a -= b; }
  friend MPoly operator*(const MPoly& a, const MPoly& b) {
    MPoly r;
    for (auto& [ma, ca] : a.t_)
      for (auto& [mb, cb] : b.t_) r.add_term(mono_mul(ma, mb), ca * cb);
    return r;
  }
  friend MPoly operator*(MPoly a, const GaussRat& s) { return a *= s; }
  friend MPoly operator*(const GaussRat& s, MPoly a) { return a *= s; }
  friend bool operator==(const MPoly& a, const MPoly& b) { return a.t_ == b.t_; }
  friend bool operator!=(const MPoly& a, const MPoly& b) { return !(a == b); }

  MPoly pow(unsigned e) const {
    MPoly r(1), b = *this;
    while (e) {
      if (e & 1) r = r * b;
      e >>= 1;
      if (e) b = b * b;
    }
    return r;
  }

  int degree(int var) const {
    int d = 0;
    for (auto& [m, c] : t_) d = std::max(d, mono_exp(m, var));
    return is_zero() ? -1 : d;
  }
  int total_degree() const {
    int d = -1;
    for (auto& [m, c] : t_) d = std::max(d, mono_deg(m));
    return d;
  }
  bool contains_var(int var) const {
    for (auto& [m, c] : t_)
      if (mono_exp(m, var) > 0) return true;
    return false;
  }
  std::set<int> variables() const {
    std::set<int> s;
    for (auto& [m, c] : t_)
      for (auto& [v, e] : m) s.insert(v);
    return s;
  }

  // Coefficient of var^k, as a polynomial in the remaining variables.
  MPoly coeff(int var, int k) const {
    MPoly r;
    for (auto& [m, c] : t_) {
      if (mono_exp(m, var) != k) continue;
      Mono mm;
      for (auto& ve : m)
        if (ve.first != var) mm.push_back(ve);
      r.add_term(mm, c);
    }
    return r;
  }
  std::vector<MPoly> as_univariate(int var) const {
    int d = std::max(degree(var), 0);
    std::vector<MPoly> r(static_cast<size_t>(d + 1));
    for (auto& [m, c] : t_) {
      Mono mm;
      int e = 0;
      for (auto& ve : m) {
        if (ve.first == var) e = ve.second;
        else mm.push_back(ve);
      }
      r[static_cast<size_t>(e)].add_term(mm, c);
    }
    return r;
  }
  static MPoly from_univariate(const std::vector<MPoly>& cs, int var) {
    MPoly r;
    for (size_t k = 0; k < cs.size(); ++k) r += cs[k] * MPoly::var(var, static_cast<int>(k));
    return r;
  }

  MPoly diff(int var) const {
    MPoly r;
    for (auto& [m, c] : t_) {
      int e = mono_exp(m, var);
      if (e == 0) continue;
      Mono mm;
      for (auto& ve : m) {
        if (ve.first != var) mm.push_back(ve);
        else if (ve.second > 1) mm.emplace_back(var, ve.second - 1);
      }
      r.add_term(mm, c * GaussRat(e));
    }
    return r;
  }

  // Formal derivation of the base (da = 1 for d, ddb = 1 for db).
  MPoly derivation(int da, int ddb) const {
    MPoly r;
    auto& reg = Registry::get();
    std::map<int, int> dcache;
    for (auto& [m, c] : t_) {
      for (auto& [v, e] : m) {
        auto it = dcache.find(v);
        int dv = it != dcache.end() ? it->second : (dcache[v] = reg.derive(v, da, ddb));
        if (dv < 0) continue;
        Mono rest;
        for (auto& ve : m) {
          if (ve.first != v) rest.push_back(ve);
          else if (ve.second > 1) rest.emplace_back(v, ve.second - 1);
        }
        r.add_term(mono_mul(rest, Mono{{dv, 1}}), c * GaussRat(e));
      }
    }
    return r;
  }
  MPoly d() const { return derivation(1, 0); }
  MPoly db() const { return derivation(0, 1); }
  MPoly d(int k) const {
    MPoly r = *this;
    for (int i = 0; i < k; ++i) r = r.d();
    return r;
  }
  MPoly db(int k) const {
    MPoly r = *this;
    for (int i = 0; i < k; ++i) r = r.db();
    return r;
  }

  // Simultaneous substitution of variables by polynomials.
  MPoly subs(const std::map<int, MPoly>& s) const {
    MPoly r;
    std::map<std::pair<int, int>, MPoly> pcache;
    for (auto& [m, c] : t_) {
      MPoly term(c);
      Mono keep;
      for (auto& [v, e] : m) {
        auto it = s.find(v);
        if (it == s.end()) {
          keep.emplace_back(v, e);
          continue;
        }
        auto key = std::make_pair(v, e);
        auto pc = pcache.find(key);
        if (pc == pcache.end()) pc = pcache.emplace(key, it->second.pow(static_cast<unsigned>(e))).first;
        term = term * pc->second;
      }
      r += term * MPoly::term(GaussRat(1), keep);
    }
    return r;
  }
  MPoly subs(int var, const MPoly& val) const { return subs(std::map<int, MPoly>{{var, val}}); }

  // Substitutes a base symbol together with all its derivative symbols.
  MPoly subs_symbol(const std::string& base, const MPoly& val) const {
    std::map<int, MPoly> s;
    auto& reg = Registry::get();
    for (int v : variables()) {
      VarInfo vi = reg.info(v);
      if (vi.base == base) s[v] = val.d(vi.d).db(vi.db);
    }
    return s.empty() ? *this : subs(s);
  }

  // Keeps only terms whose monomial satisfies the predicate.
  MPoly filter(const std::function<bool(const Mono&)>& keep) const {
    MPoly r;
    for (auto& [m, c] : t_)
      if (keep(m)) r.t_.emplace(m, c);
    return r;
  }

  MPoly conj() const {
    MPoly r;
    auto& reg = Registry::get();
    for (auto& [m, c] : t_) {
      Mono mm;
      for (auto& [v, e] : m) mm = mono_mul(mm, Mono{{reg.conj(v), e}});
      r.add_term(mm, c.conj());
    }
    return r;
  }

  GaussRat eval(const std::map<int, GaussRat>& vals) const {
    GaussRat r(0);
    for (auto& [m, c] : t_) {
      GaussRat term = c;
      for (auto& [v, e] : m) {
        auto it = vals.find(v);
        if (it == vals.end()) throw std::invalid_argument("eval: missing value for " + var_name(v));
        term *= pow_s(it->second, static_cast<unsigned>(e));
      }
      r += term;
    }
    return r;
  }
  cplx eval_c(const std::map<int, cplx>& vals) const {
    cplx r(0);
    for (auto& [m, c] : t_) {
      cplx term = c.to_complex();
      for (auto& [v, e] : m) {
        auto it = vals.find(v);
        if (it == vals.end()) throw std::invalid_argument("eval: missing value for " + var_name(v));
        term *= std::pow(it->second, e);
      }
      r += term;
    }
    return r;
  }
  // Partial evaluation: substitutes the given values, keeps other variables.
  MPoly partial_eval(const std::map<int, GaussRat>& vals) const {
    MPoly r;
    for (auto& [m, c] : t_) {
      GaussRat cc = c;
      Mono keep;
      for (auto& [v, e] : m) {
        auto it = vals.find(v);
        if (it == vals.end()) keep.emplace_back(v, e);
        else cc *= pow_s(it->second, static_cast<unsigned>(e));
      }
      r.add_term(keep, cc);
    }
    return r;
  }

  // Exact quotient self / b, or nullopt when b does not divide.
  std::optional<MPoly> divide(const MPoly& b) const {
    if (b.is_zero()) throw std::domain_error("MPoly: division by zero");
    if (b.is_constant()) return *this * (GaussRat(1) / b.constant_term());
    auto lead = [](const MPoly& p) {
      auto best = p.t_.begin();
      for (auto it = p.t_.begin(); it != p.t_.end(); ++it)
        if (mono_grlex_less(best->first, it->first)) best = it;
      return best;
    };
    auto lb = lead(b);
    MPoly q, r = *this;
    while (!r.is_zero()) {
      auto lr = lead(r);
      auto md = mono_div(lr->first, lb->first);
      if (!md) return std::nullopt;
      MPoly t = MPoly::term(lr->second / lb->second, *md);
      q += t;
      r -= t * b;
    }
    return q;
  }

  std::string to_string() const {
    if (t_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // Terms ordered by descending grlex for readability; variables in registry order.
    std::vector<std::pair<Mono, GaussRat>> v(t_.begin(), t_.end());
    std::stable_sort(v.begin(), v.end(), [](auto& a, auto& b) { return mono_grlex_less(b.first, a.first); });
    for (auto& [m, c] : v) {
      std::string cs;
      bool neg = false;
      if (c.is_real()) {
        neg = sgn(c.re) < 0;
        cs = neg ? mpq_class(-c.re).get_str() : c.re.get_str();
      } else if (sgn(c.re) == 0) {
        neg = sgn(c.im) < 0;
        cs = (neg ? mpq_class(-c.im).get_str() : c.im.get_str()) + "*i";
      } else {
        cs = c.to_string();
      }
      if (first) os << (neg ? "-" : "");
      else os << (neg ? " - " : " + ");
      first = false;
      os << cs;
      if (!m.empty()) {
        os << " * ";
        bool f2 = true;
        for (auto& [var, e] : m) {
          if (!f2) os << "*";
          f2 = false;
          os << var_name(var);
          if (e > 1) os << "^" << e;
        }
      }
    }
    return os.str();
  }

  nlohmann::json to_json() const {
    std::set<int> vs = variables();
    std::vector<int> vl(vs.begin(), vs.end());
    nlohmann::json j;
    j["vars"] = nlohmann::json::array();
    for (int v : vl) j["vars"].push_back(var_name(v));
    j["terms"] = nlohmann::json::array();
    for (auto& [m, c] : t_) {
      std::vector<int> ex(vl.size(), 0);
      for (auto& [v, e] : m) ex[static_cast<size_t>(std::find(vl.begin(), vl.end(), v) - vl.begin())] = e;
      j["terms"].push_back({{"exp", ex}, {"re", c.re_str()}, {"im", c.im_str()}});
    }
    return j;
  }

  // Only plain (non-derivative) variable names are accepted.
  static MPoly from_json(const nlohmann::json& j) {
    std::vector<int> ids;
    for (auto& v : j.at("vars")) ids.push_back(var_id(v.get<std::string>()));
    MPoly r;
    for (auto& t : j.at("terms")) {
      Mono m;
      auto ex = t.at("exp").get<std::vector<int>>();
      for (size_t k = 0; k < ex.size(); ++k)
        if (ex[k] > 0) m = mono_mul(m, Mono{{ids.at(k), ex[k]}});
      r.add_term(m, GaussRat::parse(t.at("re").get<std::string>(), t.at("im").get<std::string>()));
    }
    return r;
  }

  static MPoly parse(const std::string& s);

 private:
  Terms t_;
};

inline bool is_zero_s(const MPoly& p) { return p.is_zero(); }
inline std::ostream& operator<<(std::ostream& os, const MPoly& p) { return os << p.to_string(); }

namespace detail {

// Recursive-descent parser for the canonical text form and simple inputs:
// sums, products, powers, parentheses, rationals p/q, the unit i, identifiers.
class PolyParser {
 public:
  explicit PolyParser(const std::string& s) : s_(s) {}
  MPoly run() {
    MPoly r = expr();
    skip();
    if (pos_ != s_.size()) fail("trailing input");
    return r;
  }

 private:
  void skip() { while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_; }
  [[noreturn]] void fail(const std::string& why) {
    throw std::invalid_argument("poly parse error at " + std::to_string(pos_) + ": " + why);
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
    return false;
  }
  MPoly expr() {
    MPoly r;
    bool neg = eat('-');
    if (!neg) eat('+');
    MPoly t = term();
    r = neg ? -t : t;
    for (;;) {
      if (eat('+')) r += term();
      else if (eat('-')) r -= term();
      else break;
    }
    return r;
  }
  MPoly term() {
    MPoly r = factor();
    while (eat('*')) r = r * factor();
    return r;
  }
  MPoly factor() {
    MPoly b = atom();
    if (eat('^')) {
      skip();
      size_t st = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (st == pos_) fail("exponent expected");
      b = b.pow(static_cast<unsigned>(std::stoul(s_.substr(st, pos_ - st))));
    }
    return b;
  }
  MPoly atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      MPoly r = expr();
      if (!eat(')')) fail("')' expected");
      return r;
    }
    if (c == '-') {
      ++pos_;
      return -factor();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t st = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/')) ++pos_;
      return MPoly(GaussRat(GaussRat::parse_q(s_.substr(st, pos_ - st))));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t st = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string id = s_.substr(st, pos_ - st);
      if (id == "i") return MPoly(GaussRat::i());
      return MPoly::var(id);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  const std::string& s_;
  size_t pos_ = 0;
};

}  // namespace detail

inline MPoly MPoly::parse(const std::string& s) { return detail::PolyParser(s).run(); }

// Drops monomials of total degree >= 2 in the marked variables.
inline MPoly truncate_nilpotent(const MPoly& p, const std::function<bool(int)>& marked) {
  return p.filter([&](const Mono& m) {
    int d = 0;
    for (auto& [v, e] : m)
      if (marked(v)) d += e;
    return d < 2;
  });
}

// Marks every variable whose base name is in the set (all derivative orders).
inline std::function<bool(int)> marks_bases(const std::set<std::string>& bases) {
  return [bases](int v) { return bases.count(Registry::get().info(v).base) > 0; };
}

}  // namespace hcs
