#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "yamabe/errors.hpp"

namespace yamabe {

/// Exact rational density weight alpha: a section of |Lambda^n M|^alpha.
///
/// Weights are kept as reduced fractions so that bookkeeping such as
/// (1 - 2/n) + (-2/n) + 4/n == 1 is decided exactly rather than in floating point.
class Weight {
public:
  constexpr Weight() = default;
  constexpr Weight(std::int64_t num) : num_(num), den_(1) {} // NOLINT(implicit)
  Weight(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw WeightError("weight with zero denominator");
    normalize();
  }

  /// Common weights for dimension n.
  static Weight ratio(std::int64_t num, std::int64_t den) { return {num, den}; }
  static Weight class_section(int n) { return {-2, n}; }       // -2/n
  static Weight q_tensor(int n) { return {n - 2, n}; }         // 1 - 2/n
  static Weight pairing_total(int n) { return {n - 4, n}; }    // 1 - 4/n

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_zero() const noexcept { return num_ == 0; }

  friend Weight operator+(Weight a, Weight b) { return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_}; }
  friend Weight operator-(Weight a, Weight b) { return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_}; }
  friend Weight operator*(Weight a, Weight b) { return {a.num_ * b.num_, a.den_ * b.den_}; }
  Weight operator-() const { return {-num_, den_}; }
  friend bool operator==(Weight a, Weight b) noexcept { return a.num_ == b.num_ && a.den_ == b.den_; }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend std::ostream& operator<<(std::ostream& os, Weight w) { return os << w.str(); }

private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline void require_weight(Weight got, Weight expected, const char* what) {
  if (!(got == expected)) {
    throw WeightError(std::string(what) + ": expected weight " + expected.str() + ", got " + got.str());
  }
}

} // namespace yamabe
