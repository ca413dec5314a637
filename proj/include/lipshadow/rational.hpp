#pragma once

#include <gmpxx.h>

#include <string>

namespace lipshadow {

// All 1D state (points, radii, defects, slopes) is exact rational arithmetic.
using Rational = mpq_class;

// Parses "p/q", "p", or a plain decimal ("0.25", "-1.5e-3") into an exact
// rational. Throws ParseError on malformed input or zero denominator.
Rational parse_rational(const std::string& text);

// Canonical text form: "p/q", or "p" when the denominator is 1.
std::string rational_str(const Rational& x);

// Rounded decimal rendering for human-readable tables only.
std::string rational_approx(const Rational& x, int digits = 6);

inline Rational rat_abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }

// 2^k for any integer k (k may be negative).
Rational pow2(long k);

// q^k for integer k >= 0.
Rational rat_pow(const Rational& q, long k);

// Largest integer e with 2^e <= x. Requires x > 0.
long floor_log2(const Rational& x);

}  // namespace lipshadow
