#pragma once

#include "mpoly.hpp"

namespace hcs {

// num / unit^pow with unit a single invertible variable.
class Localized {
 public:
  Localized() = default;
  Localized(int c) : num_(c) {}
  Localized(const MPoly& num, int unit = -1, int pow = 0) : num_(num), unit_(unit), pow_(pow) { normalize(); }

  static Localized unit_inverse(int unit, int k = 1) { return Localized(MPoly(1), unit, k); }

  const MPoly& num() const { return num_; }
  int unit() const { return unit_; }
  int pow() const { return pow_; }
  bool is_zero() const { return num_.is_zero(); }

  Localized operator-() const { return Localized(-num_, unit_, pow_); }
  friend Localized operator+(const Localized& a, const Localized& b) {
    int u = a.unit_ >= 0 ? a.unit_ : b.unit_;
    int k = std::max(a.pow_, b.pow_);
    return Localized(a.lift(k, u) + b.lift(k, u), u, k);
  }
  friend Localized operator-(const Localized& a, const Localized& b) { return a + (-b); }
  friend Localized operator*(const Localized& a, const Localized& b) {
    int u = a.unit_ >= 0 ? a.unit_ : b.unit_;
    check_units(a, b);
    return Localized(a.num_ * b.num_, u, a.pow_ + b.pow_);
  }
  friend bool operator==(const Localized& a, const Localized& b) { return (a - b).is_zero(); }
  friend bool operator!=(const Localized& a, const Localized& b) { return !(a == b); }

  std::string to_string() const {
    if (pow_ == 0) return num_.to_string();
    return "(" + num_.to_string() + ") / " + var_name(unit_) + (pow_ > 1 ? "^" + std::to_string(pow_) : "");
  }

 private:
  static void check_units(const Localized& a, const Localized& b) {
    if (a.unit_ >= 0 && b.unit_ >= 0 && a.unit_ != b.unit_ && a.pow_ > 0 && b.pow_ > 0)
      throw std::invalid_argument("Localized: mismatched units");
  }
  MPoly lift(int k, int u) const {
    if (k == pow_) return num_;
    return num_ * MPoly::var(u, k - pow_);
  }
  void normalize() {
    if (unit_ < 0) { pow_ = 0; return; }
    while (pow_ > 0 && !num_.is_zero()) {
      bool all = true;
      for (auto& [m, c] : num_.terms())
        if (mono_exp(m, unit_) == 0) { all = false; break; }
      if (!all) break;
      num_ = *num_.divide(MPoly::var(unit_));
      --pow_;
    }
    if (num_.is_zero()) pow_ = 0;
  }

  MPoly num_;
  int unit_ = -1;
  int pow_ = 0;
};

inline bool is_zero_s(const Localized& l) { return l.is_zero(); }

}  // namespace hcs
