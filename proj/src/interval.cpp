#include "lipshadow/interval.hpp"

#include <stdexcept>

namespace lipshadow {

Interval::Interval(Rational l, Rational h) : lo(std::move(l)), hi(std::move(h)) {
  if (lo > hi) throw std::invalid_argument("interval with lo > hi: " + str());
}

std::optional<Interval> Interval::shrink(const Rational& delta) const {
  Rational nl = lo + delta, nh = hi - delta;
  if (nl > nh) return std::nullopt;
  return Interval(nl, nh);
}

std::optional<Interval> Interval::intersect(const Interval& other) const {
  Rational nl = std::max(lo, other.lo), nh = std::min(hi, other.hi);
  if (nl > nh) return std::nullopt;
  return Interval(nl, nh);
}

Interval Interval::hull(const Interval& other) const {
  return Interval(std::min(lo, other.lo), std::max(hi, other.hi));
}

}  // namespace lipshadow
