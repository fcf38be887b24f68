#pragma once

#include <cassert>
#include <string>
#include <string_view>

#include "relucert/scalar.hpp"

namespace relucert {

/// A scalar extended with +/- infinity. Only variable bounds may be
/// infinite; infinities absorb in sums and never tighten anything.
template <typename S>
class Bound {
 public:
  enum class Kind { neg_inf, finite, pos_inf };

  Bound() : kind_(Kind::finite), value_() {}
  Bound(S v) : kind_(Kind::finite), value_(std::move(v)) {}

  static Bound pos_inf() { return Bound(Kind::pos_inf); }
  static Bound neg_inf() { return Bound(Kind::neg_inf); }

  bool is_finite() const { return kind_ == Kind::finite; }
  bool is_pos_inf() const { return kind_ == Kind::pos_inf; }
  bool is_neg_inf() const { return kind_ == Kind::neg_inf; }

  const S& value() const {
    assert(is_finite());
    return value_;
  }

  /// Adds coeff * other into this bound, absorbing infinities. A sum never
  /// mixes +inf and -inf within one row-extreme evaluation.
  void add_scaled(const S& coeff, const Bound& other) {
    if (coeff.is_zero()) return;
    if (!other.is_finite()) {
      Kind inf = (coeff.sign() > 0) == other.is_pos_inf() ? Kind::pos_inf : Kind::neg_inf;
      assert(kind_ == Kind::finite || kind_ == inf);
      kind_ = inf;
      return;
    }
    if (kind_ == Kind::finite) value_ += coeff * other.value();
  }

  void add(const Bound& other) { add_scaled(S(1), other); }

  friend Bound operator-(const Bound& b) {
    switch (b.kind_) {
      case Kind::pos_inf: return neg_inf();
      case Kind::neg_inf: return pos_inf();
      default: return Bound(-b.value_);
    }
  }

  friend bool operator==(const Bound& a, const Bound& b) {
    if (a.kind_ != b.kind_) return false;
    return a.kind_ != Kind::finite || a.value_ == b.value_;
  }

  std::string str() const {
    switch (kind_) {
      case Kind::pos_inf: return "+inf";
      case Kind::neg_inf: return "-inf";
      default: return value_.str();
    }
  }

  static Bound parse(std::string_view text) {
    if (text == "+inf" || text == "inf") return pos_inf();
    if (text == "-inf") return neg_inf();
    return Bound(S::parse(text));
  }

 private:
  explicit Bound(Kind k) : kind_(k), value_() {}

  Kind kind_;
  S value_;
};

/// Mode-aware three-way comparison; infinities compare strictly against
/// everything finite.
template <typename S>
int cmp(const Bound<S>& a, const Bound<S>& b) {
  if (a.is_neg_inf()) return b.is_neg_inf() ? 0 : -1;
  if (a.is_pos_inf()) return b.is_pos_inf() ? 0 : 1;
  if (b.is_neg_inf()) return 1;
  if (b.is_pos_inf()) return -1;
  return cmp_bounds(a.value(), b.value());
}

template <typename S>
int cmp(const S& a, const Bound<S>& b) {
  return cmp(Bound<S>(a), b);
}

template <typename S>
int cmp(const Bound<S>& a, const S& b) {
  return cmp(a, Bound<S>(b));
}

template <typename S>
Bound<Rational> bound_to_rational(const Bound<S>& b) {
  if (b.is_pos_inf()) return Bound<Rational>::pos_inf();
  if (b.is_neg_inf()) return Bound<Rational>::neg_inf();
  return Bound<Rational>(to_rational(b.value()));
}

template <typename S>
Bound<S> bound_from_rational(const Bound<Rational>& b) {
  if (b.is_pos_inf()) return Bound<S>::pos_inf();
  if (b.is_neg_inf()) return Bound<S>::neg_inf();
  return Bound<S>(from_rational<S>(b.value()));
}

}  // namespace relucert
