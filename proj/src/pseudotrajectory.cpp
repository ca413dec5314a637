#include "lipshadow/pseudotrajectory.hpp"

#include "lipshadow/errors.hpp"

namespace lipshadow {

Pseudotrajectory Pseudotrajectory::mirrored() const {
  Pseudotrajectory out;
  out.points.reserve(points.size());
  for (const auto& x : points) out.points.push_back(-x);
  out.defect = defect;
  return out;
}

MapRef map_ref(const PiecewiseAffineMap1D& map) {
  return MapRef{[&map](const Rational& x) { return map.eval(x); }, map.domain()};
}

Pseudotrajectory measure_defect(const MapRef& map, std::vector<Rational> points) {
  if (points.empty()) throw std::invalid_argument("pseudotrajectory needs at least one point");
  for (std::size_t k = 0; k < points.size(); ++k)
    if (!map.domain.contains(points[k]))
      throw OutOfDomainError("point " + std::to_string(k) + " outside map domain",
                             static_cast<long>(k));
  Pseudotrajectory out;
  out.points = std::move(points);
  Rational d = 0;
  for (std::size_t k = 0; k + 1 < out.points.size(); ++k)
    d = std::max(d, rat_abs(out.points[k + 1] - map.eval(out.points[k])));
  out.defect = d;
  return out;
}

Pseudotrajectory measure_defect(const PiecewiseAffineMap1D& map, std::vector<Rational> points) {
  return measure_defect(map_ref(map), std::move(points));
}

}  // namespace lipshadow
