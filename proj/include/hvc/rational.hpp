#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace hvc {

/// Exact rational number with 64-bit numerator and positive denominator,
/// always stored in lowest terms. Used for literals so that emitted
/// obligations do not depend on floating-point formatting.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Parses "12", "3.25", "-0.5" exactly. Throws std::invalid_argument.
  static Rational parse_decimal(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  bool is_negative() const { return num_ < 0; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "3", "-7", "1/2", "-1/2"
  std::string to_string() const;

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace hvc
