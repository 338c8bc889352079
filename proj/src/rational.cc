#include "tek/rational.h"

#include <algorithm>
#include <cctype>

namespace tek {

namespace {

BigInt Pow10(int n) {
  BigInt r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

std::optional<BigInt> ParseDigits(std::string_view s) {
  if (s.empty()) return std::nullopt;
  BigInt r = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    r = r * 10 + (c - '0');
  }
  return r;
}

}  // namespace

std::string ToFixed(const Rational& value, int digits) {
  const bool negative = value < 0;
  Rational mag = negative ? Rational(-value) : value;
  BigInt scale = Pow10(digits);
  BigInt num = boost::multiprecision::numerator(mag) * scale;
  BigInt den = boost::multiprecision::denominator(mag);
  BigInt q = num / den;
  BigInt rem = num % den;
  if (rem * 2 >= den) q += 1;
  std::string s = q.str();
  if (digits > 0) {
    if (static_cast<int>(s.size()) <= digits) {
      s.insert(0, static_cast<std::size_t>(digits + 1 - s.size()), '0');
    }
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  }
  if (negative && q != 0) s.insert(0, "-");
  return s;
}

std::string FormatExact(const Rational& value) {
  BigInt den = boost::multiprecision::denominator(value);
  BigInt d = den;
  int twos = 0;
  int fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) {
    return boost::multiprecision::numerator(value).str() + "/" + den.str();
  }
  int digits = std::max(twos, fives);
  std::string s = ToFixed(value, digits);
  return s;
}

std::optional<Rational> ParseRational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  Rational result;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = ParseDigits(text.substr(0, slash));
    auto den = ParseDigits(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    result = Rational(*num, *den);
  } else if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    BigInt w = 0;
    if (!whole.empty()) {
      auto parsed = ParseDigits(whole);
      if (!parsed) return std::nullopt;
      w = *parsed;
    }
    BigInt f = 0;
    if (!frac.empty()) {
      auto parsed = ParseDigits(frac);
      if (!parsed) return std::nullopt;
      f = *parsed;
    }
    BigInt scale = Pow10(static_cast<int>(frac.size()));
    result = Rational(w * scale + f, scale);
  } else {
    auto parsed = ParseDigits(text);
    if (!parsed) return std::nullopt;
    result = Rational(*parsed);
  }
  return negative ? Rational(-result) : result;
}

double ToDouble(const Rational& value) {
  return value.convert_to<double>();
}

}  // namespace tek
