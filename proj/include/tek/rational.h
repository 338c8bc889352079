#ifndef TEK_RATIONAL_H_
#define TEK_RATIONAL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace tek {

// Exact arithmetic for shares and virtual run-time. Values only leave this
// representation through the fixed-point formatters below.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational MakeRational(std::int64_t num, std::int64_t den = 1) {
  return Rational(BigInt(num), BigInt(den));
}

// Fixed-point decimal with `digits` fractional digits, rounded half away from
// zero. Platform independent.
std::string ToFixed(const Rational& value, int digits);

// Exact decimal when the denominator has only factors 2 and 5, "num/den"
// otherwise. ParseRational accepts both forms.
std::string FormatExact(const Rational& value);
std::optional<Rational> ParseRational(std::string_view text);

double ToDouble(const Rational& value);

}  // namespace tek

#endif  // TEK_RATIONAL_H_
