#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

namespace hcs {

// One registered indeterminate. Differential symbols share a base name and
// carry derivative orders (d, db) for the formal derivations of the base.
struct VarInfo {
  std::string name;
  std::string base;
  int d = 0, db = 0;
  int conj = -1;
};

class Registry {
 public:
  static Registry& get() {
    static Registry r;
    return r;
  }

  int intern(const std::string& base, int d = 0, int db = 0) {
    std::lock_guard<std::mutex> lk(mu_);
    return intern_locked(base, d, db);
  }

  VarInfo info(int id) const {
    std::lock_guard<std::mutex> lk(mu_);
    return vars_.at(static_cast<size_t>(id));
  }

  std::string name(int id) const {
    std::lock_guard<std::mutex> lk(mu_);
    return vars_.at(static_cast<size_t>(id)).name;
  }

  // Variables killed by both derivations (x, y, p, pb and similar).
  void declare_constant(const std::string& base) {
    std::lock_guard<std::mutex> lk(mu_);
    constant_.insert(base);
  }
  // Symbols killed by the antiholomorphic derivation.
  void declare_holomorphic(const std::string& base) {
    std::lock_guard<std::mutex> lk(mu_);
    holomorphic_.insert(base);
  }

  // Registers a formal conjugation pairing between two base names.
  void pair_conj(const std::string& a, const std::string& b) {
    std::lock_guard<std::mutex> lk(mu_);
    conj_base_[a] = b;
    conj_base_[b] = a;
  }

  // Id of the derivative symbol, or -1 when the derivative vanishes.
  int derive(int id, int da, int ddb) {
    std::lock_guard<std::mutex> lk(mu_);
    const VarInfo v = vars_.at(static_cast<size_t>(id));
    if (constant_.count(v.base)) return -1;
    if (ddb + v.db > 0 && holomorphic_.count(v.base)) return -1;
    return intern_locked(v.base, v.d + da, v.db + ddb);
  }

  // Conjugate partner: swaps base via the pairing and swaps derivative orders.
  int conj(int id) {
    std::lock_guard<std::mutex> lk(mu_);
    const VarInfo v = vars_.at(static_cast<size_t>(id));
    if (constant_.count(v.base) && !conj_base_.count(v.base)) return id;
    auto it = conj_base_.find(v.base);
    if (it == conj_base_.end()) throw std::logic_error("no conjugate registered for " + v.base);
    return intern_locked(it->second, v.db, v.d);
  }

  int size() const {
    std::lock_guard<std::mutex> lk(mu_);
    return static_cast<int>(vars_.size());
  }

 private:
  Registry() {
    for (const char* c : {"x", "y", "p", "pb", "X"}) {
      constant_.insert(c);
      intern_locked(c, 0, 0);
    }
    conj_base_["x"] = "xb";
    conj_base_["xb"] = "x";
    conj_base_["y"] = "yb";
    conj_base_["yb"] = "y";
    conj_base_["p"] = "pb";
    conj_base_["pb"] = "p";
    constant_.insert("xb");
    constant_.insert("yb");
  }

  static std::string render(const std::string& base, int d, int db) {
    if (d == 0 && db == 0) return base;
    std::string s;
    if (d > 0) s += d == 1 ? "d" : "d" + std::to_string(d);
    if (db > 0) s += db == 1 ? "db" : "db" + std::to_string(db);
    return s + "(" + base + ")";
  }

  int intern_locked(const std::string& base, int d, int db) {
    auto key = std::make_tuple(base, d, db);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(vars_.size());
    vars_.push_back(VarInfo{render(base, d, db), base, d, db, -1});
    index_.emplace(key, id);
    return id;
  }

  mutable std::mutex mu_;
  std::deque<VarInfo> vars_;
  std::map<std::tuple<std::string, int, int>, int> index_;
  std::set<std::string> constant_, holomorphic_;
  std::map<std::string, std::string> conj_base_;
};

inline int var_id(const std::string& base, int d = 0, int db = 0) { return Registry::get().intern(base, d, db); }
inline std::string var_name(int id) { return Registry::get().name(id); }

}  // namespace hcs
