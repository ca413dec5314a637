#include "lipshadow/map_nd.hpp"

#include <cmath>
#include <stdexcept>

#include "lipshadow/errors.hpp"

namespace lipshadow {

bool BoxND::contains(const PointND& x, double tol) const {
  for (int i = 0; i < dim(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

bool BoxND::interior_overlaps(const BoxND& other) const {
  for (int i = 0; i < dim(); ++i)
    if (std::min(hi[i], other.hi[i]) <= std::max(lo[i], other.lo[i])) return false;
  return true;
}

std::optional<BoxND> BoxND::shrink(double delta) const {
  BoxND out{lo.array() + delta, hi.array() - delta};
  for (int i = 0; i < dim(); ++i)
    if (out.lo[i] > out.hi[i]) return std::nullopt;
  return out;
}

PiecewiseAffineMapND::PiecewiseAffineMapND(int dimension, std::vector<AffineCellND> cells)
    : dim_(dimension), cells_(std::move(cells)) {
  if (dim_ <= 0) throw std::invalid_argument("dimension must be positive");
  for (const auto& c : cells_) {
    if (c.cell.dim() != dim_ || c.matrix.rows() != dim_ || c.matrix.cols() != dim_ ||
        c.offset.size() != dim_)
      throw std::invalid_argument("cell dimensions do not match map dimension");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i)
    for (std::size_t j = i + 1; j < cells_.size(); ++j)
      if (cells_[i].cell.interior_overlaps(cells_[j].cell))
        throw std::invalid_argument("cells have overlapping interiors");
}

PointND PiecewiseAffineMapND::eval(const PointND& x, double boundary_tol) const {
  const AffineCellND* first = nullptr;
  PointND value;
  for (const auto& c : cells_) {
    if (!c.cell.contains(x)) continue;
    PointND v = c.at(x);
    if (!first) {
      first = &c;
      value = v;
    } else {
      double scale = std::max(1.0, value.norm());
      if ((v - value).norm() > boundary_tol * scale)
        throw AmbiguousBoundary("containing cells disagree beyond tolerance");
    }
  }
  if (!first) throw OutOfDomainError("point outside every cell");
  return value;
}

double PiecewiseAffineMapND::lipschitz_constant() const {
  double best = 0.0;
  for (const auto& c : cells_) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.matrix);
    best = std::max(best, svd.singularValues()[0]);
  }
  return best;
}

double spectral_norm_upper(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  double n1 = m.cwiseAbs().colwise().sum().maxCoeff();
  double ninf = m.cwiseAbs().rowwise().sum().maxCoeff();
  return std::min(std::sqrt(n1 * ninf), m.norm());
}

}  // namespace lipshadow
