#pragma once

#include <gmpxx.h>

#include <atomic>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relucert {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Process-wide count of exact-scalar divisions. The proof checker is
/// supposed to get by without dividing; it samples this counter around a
/// run to enforce that.
inline std::atomic<std::uint64_t>& division_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

/// Arbitrary-precision rational, kept in lowest terms with a positive
/// denominator. This is the field every exact-mode computation runs over.
class Rational {
 public:
  Rational() : q_(0) {}
  Rational(long n) : q_(n) {}
  Rational(int n) : q_(n) {}
  Rational(long num, long den) : q_(num, den) {
    if (den == 0) throw std::invalid_argument("zero denominator");
    q_.canonicalize();
  }
  explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

  /// Accepts "p", "p/q" and plain decimal notation ("-2.75").
  static Rational parse(std::string_view text);

  /// Exact value of a binary64 float (every finite double is rational).
  static Rational from_double(double d) {
    Rational r;
    mpq_set_d(r.q_.get_mpq_t(), d);
    return r;
  }

  /// "p" when the denominator is 1, else "p/q".
  std::string str() const { return q_.get_str(); }

  double to_double() const { return q_.get_d(); }

  int sign() const { return sgn(q_); }
  bool is_zero() const { return sign() == 0; }

  Rational operator-() const { return Rational(mpq_class(-q_)); }

  Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
  Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
  Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("rational division by zero");
    division_count().fetch_add(1, std::memory_order_relaxed);
    q_ /= o.q_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
  friend bool operator!=(const Rational& a, const Rational& b) { return a.q_ != b.q_; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.q_ < b.q_; }
  friend bool operator<=(const Rational& a, const Rational& b) { return a.q_ <= b.q_; }
  friend bool operator>(const Rational& a, const Rational& b) { return a.q_ > b.q_; }
  friend bool operator>=(const Rational& a, const Rational& b) { return a.q_ >= b.q_; }

 private:
  mpq_class q_;
};

inline Rational Rational::parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty scalar");
  std::string s(text);
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    // decimal form: sign, integer part, fractional digits
    bool neg = false;
    std::size_t i = 0;
    if (s[0] == '+' || s[0] == '-') {
      neg = s[0] == '-';
      i = 1;
    }
    std::string digits = s.substr(i, dot - i) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    if (digits.empty() || frac_len == 0 ||
        digits.find_first_not_of("0123456789") != std::string::npos)
      throw ParseError("bad decimal scalar '" + s + "'");
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    mpq_class q(neg ? mpz_class(-num) : num, den);
    q.canonicalize();
    return Rational(q);
  }
  try {
    mpq_class q(s, 10);
    if (q.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
    q.canonicalize();
    return Rational(q);
  } catch (const std::invalid_argument&) {
    throw ParseError("bad scalar '" + s + "'");
  }
}

/// Binary64 scalar for the opt-in float mode. Arithmetic is plain IEEE;
/// only bound comparisons go through the configured tolerance.
struct FloatScalar {
  double v = 0.0;

  FloatScalar() = default;
  FloatScalar(double d) : v(d) {}
  FloatScalar(int n) : v(n) {}
  FloatScalar(long n) : v(static_cast<double>(n)) {}

  /// Tolerance used when comparing values against bounds.
  static double& epsilon() {
    static double eps = 1e-9;
    return eps;
  }

  static FloatScalar parse(std::string_view text) {
    return FloatScalar(Rational::parse(text).to_double());
  }

  /// Shortest decimal that round-trips.
  std::string str() const {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  }

  double to_double() const { return v; }
  int sign() const { return v > 0 ? 1 : v < 0 ? -1 : 0; }
  bool is_zero() const { return v == 0.0; }

  FloatScalar operator-() const { return FloatScalar(-v); }
  FloatScalar& operator+=(FloatScalar o) { v += o.v; return *this; }
  FloatScalar& operator-=(FloatScalar o) { v -= o.v; return *this; }
  FloatScalar& operator*=(FloatScalar o) { v *= o.v; return *this; }
  FloatScalar& operator/=(FloatScalar o) { v /= o.v; return *this; }

  friend FloatScalar operator+(FloatScalar a, FloatScalar b) { return a += b; }
  friend FloatScalar operator-(FloatScalar a, FloatScalar b) { return a -= b; }
  friend FloatScalar operator*(FloatScalar a, FloatScalar b) { return a *= b; }
  friend FloatScalar operator/(FloatScalar a, FloatScalar b) { return a /= b; }

  friend bool operator==(FloatScalar a, FloatScalar b) { return a.v == b.v; }
  friend bool operator!=(FloatScalar a, FloatScalar b) { return a.v != b.v; }
  friend bool operator<(FloatScalar a, FloatScalar b) { return a.v < b.v; }
  friend bool operator<=(FloatScalar a, FloatScalar b) { return a.v <= b.v; }
  friend bool operator>(FloatScalar a, FloatScalar b) { return a.v > b.v; }
  friend bool operator>=(FloatScalar a, FloatScalar b) { return a.v >= b.v; }
};

template <typename S>
inline constexpr bool is_exact_scalar_v = false;
template <>
inline constexpr bool is_exact_scalar_v<Rational> = true;

/// Three-way comparison in the active mode's bound semantics: exact for
/// rationals, tolerance-equal for floats.
inline int cmp_bounds(const Rational& a, const Rational& b) {
  return a < b ? -1 : a == b ? 0 : 1;
}
inline int cmp_bounds(FloatScalar a, FloatScalar b) {
  double d = a.v - b.v;
  double eps = FloatScalar::epsilon();
  if (d >= -eps && d <= eps) return 0;
  return d < 0 ? -1 : 1;
}

/// Whether a coefficient is safe to pivot on.
inline bool usable_pivot(const Rational& a) { return !a.is_zero(); }
inline bool usable_pivot(FloatScalar a) {
  double m = a.v < 0 ? -a.v : a.v;
  return m > FloatScalar::epsilon();
}

inline Rational to_rational(const Rational& r) { return r; }
inline Rational to_rational(FloatScalar f) { return Rational::from_double(f.v); }

template <typename S>
S from_rational(const Rational& r);
template <>
inline Rational from_rational<Rational>(const Rational& r) { return r; }
template <>
inline FloatScalar from_rational<FloatScalar>(const Rational& r) {
  return FloatScalar(r.to_double());
}

}  // namespace relucert
