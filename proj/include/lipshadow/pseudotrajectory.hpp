#pragma once

#include <functional>
#include <vector>

#include "lipshadow/interval.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/rational.hpp"

namespace lipshadow {

// Finite pseudotrajectory with its measured defect d = max_k |x_{k+1} - f(x_k)|.
struct Pseudotrajectory {
  std::vector<Rational> points;
  Rational defect = 0;

  long T() const { return static_cast<long>(points.size()) - 1; }
  const Rational& operator[](std::size_t k) const { return points[k]; }

  Pseudotrajectory mirrored() const;
};

// Minimal evaluation interface shared by PiecewiseAffineMap1D and the scaled
// family homeomorphism (which has no finite piece list).
struct MapRef {
  std::function<Rational(const Rational&)> eval;
  Interval domain;
};

MapRef map_ref(const PiecewiseAffineMap1D& map);

// Measures the exact defect; OutOfDomainError (with index) if any point,
// including the last, leaves the domain.
Pseudotrajectory measure_defect(const MapRef& map, std::vector<Rational> points);
Pseudotrajectory measure_defect(const PiecewiseAffineMap1D& map, std::vector<Rational> points);

}  // namespace lipshadow
