#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "stlm/errors.hpp"

namespace stlm {

// Exact timestamps. Streams at 25, 12.5 and 1 tokens/s must sort with exact
// ties at shared instants, which float seconds cannot guarantee.
class Rational {
 public:
  constexpr Rational() : num_(0), den_(1) {}

  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) fail_numeric("Rational: zero denominator");
    normalize();
  }

  // Nearest microsecond tick. Manifest times and rates are short decimals,
  // and all frame grids in use (25, 12.5, 1 Hz) are exact in micro ticks.
  static Rational from_decimal(double value) {
    const double scaled = value * 1e6;
    const auto ticks = static_cast<std::int64_t>(scaled < 0 ? scaled - 0.5 : scaled + 0.5);
    return Rational(ticks, 1000000);
  }

  static Rational from_seconds(double seconds) { return from_decimal(seconds); }

  static Rational from_frame(std::int64_t frame, Rational rate) {
    return Rational(frame * rate.den_, rate.num_);
  }

  constexpr std::int64_t num() const { return num_; }
  constexpr std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }

  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }

  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }

  friend Rational operator*(const Rational& a, std::int64_t k) { return Rational(a.num_ * k, a.den_); }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_;
  std::int64_t den_;
};

}  // namespace stlm
