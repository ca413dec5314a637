#pragma once

#include <optional>
#include <string>

#include "lipshadow/rational.hpp"

namespace lipshadow {

// Closed rational interval [lo, hi]. Degenerate (lo == hi) is allowed.
struct Interval {
  Rational lo, hi;

  Interval() : lo(0), hi(0) {}
  Interval(Rational l, Rational h);

  static Interval point(const Rational& x) { return Interval(x, x); }

  bool contains(const Rational& x) const { return lo <= x && x <= hi; }
  bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
  bool is_point() const { return lo == hi; }

  Rational midpoint() const { return (lo + hi) / 2; }
  Rational radius() const { return (hi - lo) / 2; }
  Rational length() const { return hi - lo; }

  // [lo + delta, hi - delta]; empty when the shrink exceeds the half-width.
  std::optional<Interval> shrink(const Rational& delta) const;
  Interval inflate(const Rational& delta) const { return Interval(lo - delta, hi + delta); }

  std::optional<Interval> intersect(const Interval& other) const;
  Interval hull(const Interval& other) const;

  bool operator==(const Interval& other) const { return lo == other.lo && hi == other.hi; }

  std::string str() const { return "[" + rational_str(lo) + ", " + rational_str(hi) + "]"; }
};

}  // namespace lipshadow
