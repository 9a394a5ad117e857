#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace shla {

/// Exact rational number with 64-bit numerator/denominator.
/// Intermediate products go through 128-bit arithmetic; anything that
/// still overflows 64 bits after reduction throws.
class Rational {
public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  static Rational from_decimal_string(const std::string& text);

  /// Best rational approximation with denominator bounded by `max_den`
  /// (continued fractions).
  static Rational approximate(double value, std::int64_t max_den = (1LL << 45)) {
    if (!std::isfinite(value)) throw std::domain_error("cannot approximate non-finite value");
    bool neg = value < 0;
    double x = neg ? -value : value;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double frac = x;
    for (int it = 0; it < 64; ++it) {
      double fl = std::floor(frac);
      if (fl > 9e18) break;
      std::int64_t a = static_cast<std::int64_t>(fl);
      if (q1 != 0 && a > (max_den - q0) / q1) break;
      std::int64_t p2 = a * p1 + p0;
      std::int64_t q2 = a * q1 + q0;
      if (q2 > max_den || q2 <= 0) break;
      p0 = p1;
      q0 = q1;
      p1 = p2;
      q1 = q2;
      double rem = frac - fl;
      if (rem < 1e-18) break;
      frac = 1.0 / rem;
    }
    if (q1 == 0) return Rational(0);
    return neg ? -Rational(p1, q1) : Rational(p1, q1);
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == 1 && den_ == 1; }
  bool is_integer() const { return den_ == 1; }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_,
                i128(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_,
                i128(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
  }
  Rational operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

  Rational pow(int e) const {
    if (e == 0) return Rational(1);
    Rational base = e > 0 ? *this : Rational(1) / *this;
    int n = e > 0 ? e : -e;
    Rational acc(1);
    for (int i = 0; i < n; ++i) acc = acc * base;
    return acc;
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

private:
  using i128 = __int128;

  static Rational make(i128 n, i128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    i128 g = gcd128(n < 0 ? -n : n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  static i128 gcd128(i128 a, i128 b) {
    while (b != 0) {
      i128 t = a % b;
      a = b;
      b = t;
    }
    return a < 0 ? -a : a;
  }

  void normalize() { *this = make(num_, den_); }

  std::int64_t num_;
  std::int64_t den_;
};

inline Rational Rational::from_decimal_string(const std::string& text) {
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(std::stoll(text));
  std::string whole = text.substr(0, dot);
  std::string frac = text.substr(dot + 1);
  if (frac.size() > 18) throw std::invalid_argument("decimal literal too long: " + text);
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  std::int64_t w = whole.empty() ? 0 : std::stoll(whole);
  std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
  bool neg = !whole.empty() && whole[0] == '-';
  Rational r = Rational(w) + (neg ? -Rational(f, den) : Rational(f, den));
  return r;
}

}  // namespace shla
