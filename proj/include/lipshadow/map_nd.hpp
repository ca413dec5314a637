#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace lipshadow {

using PointND = Eigen::VectorXd;

// Axis-aligned box; per-axis closed [lo, hi].
struct BoxND {
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const PointND& x, double tol = 0.0) const;
  bool interior_overlaps(const BoxND& other) const;
  // Per-axis inward shrink; nullopt when any axis empties.
  std::optional<BoxND> shrink(double delta) const;
};

// One affine cell x |-> matrix*x + offset on `cell`.
struct AffineCellND {
  BoxND cell;
  Eigen::MatrixXd matrix;
  PointND offset;

  PointND at(const PointND& x) const { return matrix * x + offset; }
};

// Floating-point piecewise-affine map: evaluation is defined wherever a cell
// contains the query; cells touching at their boundaries must agree there
// within `boundary_tol` (relative), else AmbiguousBoundary.
class PiecewiseAffineMapND {
public:
  PiecewiseAffineMapND(int dimension, std::vector<AffineCellND> cells);

  int dimension() const { return dim_; }
  const std::vector<AffineCellND>& cells() const { return cells_; }

  PointND eval(const PointND& x, double boundary_tol = kDefaultBoundaryTol) const;

  // Max spectral norm over cell matrices (SVD; reported with its tolerance).
  double lipschitz_constant() const;

  static constexpr double kDefaultBoundaryTol = 9.094947017729282e-13;  // 2^-40

private:
  int dim_;
  std::vector<AffineCellND> cells_;
};

// Certified upper bound on the spectral norm: min(sqrt(|M|_1 |M|_inf), |M|_F).
double spectral_norm_upper(const Eigen::MatrixXd& m);

}  // namespace lipshadow
