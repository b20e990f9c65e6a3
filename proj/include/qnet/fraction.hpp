#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace qnet {

/// Exact rational value. Kept as produced (no implicit reduction); equality
/// and ordering cross-multiply in 128-bit arithmetic, so they stay exact for
/// components well beyond 2^62. The denominator is always >= 1.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Fraction() = default;
  constexpr Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den < 1) throw std::invalid_argument("Fraction: denominator must be >= 1");
  }

  /// Normalized copy (gcd divided out). Output convenience only; protocol
  /// state is compared unreduced.
  Fraction reduced() const {
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g == 0) return Fraction(0, 1);
    return Fraction(num / g, den / g);
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend constexpr bool operator!=(const Fraction& a, const Fraction& b) { return !(a == b); }
  friend constexpr bool operator<(const Fraction& a, const Fraction& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend constexpr bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
  friend constexpr bool operator<=(const Fraction& a, const Fraction& b) { return !(b < a); }
  friend constexpr bool operator>=(const Fraction& a, const Fraction& b) { return !(a < b); }

  friend std::ostream& operator<<(std::ostream& os, const Fraction& f) {
    return os << f.num << '/' << f.den;
  }
};

constexpr const Fraction& min(const Fraction& a, const Fraction& b) { return b < a ? b : a; }
constexpr const Fraction& max(const Fraction& a, const Fraction& b) { return a < b ? b : a; }

}  // namespace qnet
