#pragma once

#include <cstddef>
#include <vector>

#include "lipshadow/interval.hpp"
#include "lipshadow/rational.hpp"

namespace lipshadow {

// One affine piece x |-> slope*x + intercept on a closed domain interval.
struct AffinePiece1D {
  Interval domain;
  Rational slope;
  Rational intercept;

  Rational at(const Rational& x) const { return slope * x + intercept; }
  // Exact image of the piece domain (endpoint arithmetic).
  Interval image() const;
};

// Continuous piecewise-affine map on a closed interval. Pieces are sorted,
// tile the domain exactly, own closed subintervals, and agree at shared
// endpoints (checked at construction), so boundary evaluation is unambiguous.
class PiecewiseAffineMap1D {
public:
  PiecewiseAffineMap1D(Interval domain, std::vector<AffinePiece1D> pieces);

  static PiecewiseAffineMap1D identity(const Interval& domain);
  static PiecewiseAffineMap1D affine(const Interval& domain, const Rational& slope,
                                     const Rational& intercept);

  const Interval& domain() const { return domain_; }
  const std::vector<AffinePiece1D>& pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  // Index of a piece whose domain contains x (the leftmost such piece).
  // Throws OutOfDomainError when x is outside the domain.
  std::size_t piece_index_at(const Rational& x) const;

  Rational eval(const Rational& x) const;

  // [x, f(x), ..., f^k(x)]; OutOfDomainError carries the failing step index.
  std::vector<Rational> iterate(const Rational& x, long k) const;

  // Exact image of an interval (connected because the map is continuous).
  Interval image(const Interval& window) const;

  // Maximal intervals J with f(J) contained in `target`; adjacent per-piece
  // contributions are merged. May be empty.
  std::vector<Interval> preimage(const Interval& target) const;

  // max |slope| over pieces.
  Rational lipschitz_constant() const;

  // Sub-map on `window` (must be inside the domain); pieces are clipped.
  PiecewiseAffineMap1D restrict(const Interval& window) const;

  bool strictly_increasing() const;

  bool operator==(const PiecewiseAffineMap1D& other) const {
    return domain_ == other.domain_ && pieces_same(other);
  }
  bool pieces_same(const PiecewiseAffineMap1D& other) const;

private:
  Interval domain_;
  std::vector<AffinePiece1D> pieces_;
};

// Exact composition g(h(x)) on the domain of h. Requires the image of h to
// lie inside the domain of g (OutOfDomainError otherwise); refinement beyond
// `piece_cap` pieces raises PieceBudgetExceeded.
PiecewiseAffineMap1D compose(const PiecewiseAffineMap1D& g, const PiecewiseAffineMap1D& h,
                             std::size_t piece_cap = 100000);

// The rescaling g'(y) = M^{-1} g(M(y-m)) + m on J' = {y : M(y-m) in J}.
// Slopes are preserved; breakpoints map through y = M^{-1} x + m. M != 0.
PiecewiseAffineMap1D conjugate_map(const PiecewiseAffineMap1D& g, const Rational& M,
                                   const Rational& m);

}  // namespace lipshadow
