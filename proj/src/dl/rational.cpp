#include "hvc/rational.hpp"

#include <numeric>
#include <stdexcept>

namespace hvc {

namespace {

using Wide = __int128;

std::int64_t narrow(Wide v) {
  if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("rational overflow");
  return static_cast<std::int64_t>(v);
}

Rational make(Wide num, Wide den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  Wide a = num < 0 ? -num : num;
  Wide b = den;
  while (b != 0) {
    Wide r = a % b;
    a = b;
    b = r;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  return Rational(narrow(num), narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  num_ = num;
  den_ = den;
}

Rational Rational::parse_decimal(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty numeral");
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-') {
    negative = true;
    i = 1;
  }
  Wide num = 0;
  Wide den = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("malformed numeral: " + std::string(text));
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("malformed numeral: " + std::string(text));
    seen_digit = true;
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
    if (num > (Wide{1} << 100) || den > (Wide{1} << 100))
      throw std::overflow_error("numeral too long: " + std::string(text));
  }
  if (!seen_digit) throw std::invalid_argument("malformed numeral: " + std::string(text));
  return make(negative ? -num : num, den);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return make(-Wide{num_}, den_); }

Rational operator+(const Rational& a, const Rational& b) {
  return make(Wide{a.num_} * b.den_ + Wide{b.num_} * a.den_, Wide{a.den_} * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
  return make(Wide{a.num_} * b.den_ - Wide{b.num_} * a.den_, Wide{a.den_} * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return make(Wide{a.num_} * b.num_, Wide{a.den_} * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::domain_error("rational division by zero");
  return make(Wide{a.num_} * b.den_, Wide{a.den_} * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  Wide lhs = Wide{a.num_} * b.den_;
  Wide rhs = Wide{b.num_} * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace hvc
