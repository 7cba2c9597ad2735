#include "ltg/rational.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace ltg {

namespace {

Rational pow10(int exponent) {
  Rational result = 1;
  Rational base = exponent >= 0 ? Rational(10) : Rational(1, 10);
  for (int i = 0; i < std::abs(exponent); ++i) result *= base;
  return result;
}

Rational parse_decimal(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty number");
  bool negative = false;
  std::size_t pos = 0;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  boost::multiprecision::mpz_int digits = 0;
  int scale = 0;
  bool seen_digit = false;
  bool after_point = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c >= '0' && c <= '9') {
      digits = digits * 10 + (c - '0');
      if (after_point) --scale;
      seen_digit = true;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E')
      throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    ++pos;
    int exponent = 0;
    auto rest = text.substr(pos);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
    if (ec != std::errc() || ptr != rest.data() + rest.size())
      throw std::invalid_argument("malformed exponent in '" + std::string(text) + "'");
    scale += exponent;
  }
  Rational value = Rational(digits) * pow10(scale);
  return negative ? Rational(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  Rational num = parse_decimal(text.substr(0, slash));
  Rational den = parse_decimal(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return num / den;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite number");
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::invalid_argument("cannot format number");
  return parse_decimal(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

std::string to_string(const Rational& value) {
  auto num = boost::multiprecision::numerator(value);
  auto den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

long long ceil_to_integer(const Rational& value) {
  auto num = boost::multiprecision::numerator(value);
  auto den = boost::multiprecision::denominator(value);
  boost::multiprecision::mpz_int q = num / den;  // truncates toward zero
  if (q * den < num) q += 1;
  return q.convert_to<long long>();
}

}  // namespace ltg
