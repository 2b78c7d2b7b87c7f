#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace tap {

// Exact arithmetic for LP values, credits and potentials. All quantities the
// certification layer touches are small half-integers or sums of a few
// user-supplied fractions, so 64-bit numerators are ample.
// Compare for (in)equality against Rational(k), never a bare integer: under
// C++20 rewritten comparisons boost's mixed operator== recurses forever.
using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// Accepts "p", "p/q" and "-p/q".
inline Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    if (s.empty()) throw std::invalid_argument("empty rational component");
    std::size_t pos = 0;
    long long value = 0;
    try {
      value = std::stoll(std::string(s), &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    }
    if (pos != s.size()) {
      throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    }
    return value;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(text));
  const std::int64_t num = parse_int(text.substr(0, slash));
  const std::int64_t den = parse_int(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

}  // namespace tap
