#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace ltg {

using Rational = boost::multiprecision::mpq_rational;

/// Parses "3", "-0.25", "1e-3" or "7/20" into an exact rational.
Rational parse_rational(std::string_view text);

/// Exact rational for the shortest decimal that round-trips to `value`,
/// so 0.2 maps to 1/5 rather than to its binary expansion.
Rational rational_from_double(double value);

/// "p/q" (or "p" when q == 1).
std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.convert_to<double>(); }

/// Smallest integer >= value.
long long ceil_to_integer(const Rational& value);

// Scalar helpers shared by the double and exact-rational instantiations.
template <class S>
S scalar_from(const Rational& value);

template <>
inline double scalar_from<double>(const Rational& value) {
  return to_double(value);
}

template <>
inline Rational scalar_from<Rational>(const Rational& value) {
  return value;
}

inline double scalar_to_double(double v) { return v; }
inline double scalar_to_double(const Rational& v) { return to_double(v); }

}  // namespace ltg
