#include "lipshadow/pam.hpp"

#include <algorithm>

#include "lipshadow/errors.hpp"

namespace lipshadow {

Interval AffinePiece1D::image() const {
  Rational a = at(domain.lo), b = at(domain.hi);
  return a <= b ? Interval(a, b) : Interval(b, a);
}

PiecewiseAffineMap1D::PiecewiseAffineMap1D(Interval domain, std::vector<AffinePiece1D> pieces)
    : domain_(std::move(domain)), pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("map needs at least one piece");
  std::sort(pieces_.begin(), pieces_.end(),
            [](const AffinePiece1D& a, const AffinePiece1D& b) { return a.domain.lo < b.domain.lo; });
  if (pieces_.front().domain.lo != domain_.lo || pieces_.back().domain.hi != domain_.hi)
    throw std::invalid_argument("pieces do not tile the declared domain");
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
    const auto& cur = pieces_[i];
    const auto& nxt = pieces_[i + 1];
    if (cur.domain.hi != nxt.domain.lo)
      throw std::invalid_argument("gap or overlap between pieces at " + cur.domain.str());
    if (cur.at(cur.domain.hi) != nxt.at(nxt.domain.lo))
      throw std::invalid_argument("discontinuity at x = " + rational_str(cur.domain.hi));
  }
}

PiecewiseAffineMap1D PiecewiseAffineMap1D::identity(const Interval& domain) {
  return affine(domain, 1, 0);
}

PiecewiseAffineMap1D PiecewiseAffineMap1D::affine(const Interval& domain, const Rational& slope,
                                                  const Rational& intercept) {
  return PiecewiseAffineMap1D(domain, {AffinePiece1D{domain, slope, intercept}});
}

std::size_t PiecewiseAffineMap1D::piece_index_at(const Rational& x) const {
  if (!domain_.contains(x))
    throw OutOfDomainError("x = " + rational_str(x) + " outside map domain " + domain_.str());
  // First piece with domain.hi >= x; by the tiling invariant it contains x.
  std::size_t lo = 0, hi = pieces_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (pieces_[mid].domain.hi < x)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

Rational PiecewiseAffineMap1D::eval(const Rational& x) const {
  return pieces_[piece_index_at(x)].at(x);
}

std::vector<Rational> PiecewiseAffineMap1D::iterate(const Rational& x, long k) const {
  std::vector<Rational> orbit;
  orbit.reserve(static_cast<std::size_t>(k) + 1);
  orbit.push_back(x);
  for (long j = 0; j < k; ++j) {
    if (!domain_.contains(orbit.back()))
      throw OutOfDomainError("orbit left the domain at step " + std::to_string(j), j);
    orbit.push_back(eval(orbit.back()));
  }
  return orbit;
}

Interval PiecewiseAffineMap1D::image(const Interval& window) const {
  if (!domain_.contains(window))
    throw OutOfDomainError("window " + window.str() + " outside map domain");
  bool first = true;
  Interval acc;
  for (const auto& p : pieces_) {
    auto cut = p.domain.intersect(window);
    if (!cut) continue;
    Interval img = AffinePiece1D{*cut, p.slope, p.intercept}.image();
    acc = first ? img : acc.hull(img);
    first = false;
  }
  return acc;
}

std::vector<Interval> PiecewiseAffineMap1D::preimage(const Interval& target) const {
  std::vector<Interval> out;
  for (const auto& p : pieces_) {
    std::optional<Interval> j;
    if (p.slope == 0) {
      if (target.contains(p.intercept)) j = p.domain;
    } else {
      Rational a = (target.lo - p.intercept) / p.slope;
      Rational b = (target.hi - p.intercept) / p.slope;
      if (a > b) std::swap(a, b);
      j = Interval(a, b).intersect(p.domain);
    }
    if (!j) continue;
    if (!out.empty() && out.back().hi >= j->lo)
      out.back() = out.back().hull(*j);
    else
      out.push_back(*j);
  }
  return out;
}

Rational PiecewiseAffineMap1D::lipschitz_constant() const {
  Rational best = 0;
  for (const auto& p : pieces_) best = std::max(best, rat_abs(p.slope));
  return best;
}

PiecewiseAffineMap1D PiecewiseAffineMap1D::restrict(const Interval& window) const {
  if (!domain_.contains(window))
    throw OutOfDomainError("restriction window " + window.str() + " outside domain");
  std::vector<AffinePiece1D> clipped;
  for (const auto& p : pieces_) {
    auto cut = p.domain.intersect(window);
    if (!cut) continue;
    if (cut->is_point() && !clipped.empty()) continue;  // boundary touch only
    clipped.push_back(AffinePiece1D{*cut, p.slope, p.intercept});
  }
  // A point window touching two pieces keeps just the first.
  if (clipped.size() > 1 && clipped.back().domain.is_point()) clipped.pop_back();
  return PiecewiseAffineMap1D(window, std::move(clipped));
}

bool PiecewiseAffineMap1D::strictly_increasing() const {
  for (const auto& p : pieces_)
    if (p.slope <= 0 && !p.domain.is_point()) return false;
  return true;
}

bool PiecewiseAffineMap1D::pieces_same(const PiecewiseAffineMap1D& other) const {
  if (pieces_.size() != other.pieces_.size()) return false;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& a = pieces_[i];
    const auto& b = other.pieces_[i];
    if (!(a.domain == b.domain) || a.slope != b.slope || a.intercept != b.intercept) return false;
  }
  return true;
}

PiecewiseAffineMap1D compose(const PiecewiseAffineMap1D& g, const PiecewiseAffineMap1D& h,
                             std::size_t piece_cap) {
  std::vector<AffinePiece1D> out;
  for (const auto& hp : h.pieces()) {
    Interval img = AffinePiece1D{hp.domain, hp.slope, hp.intercept}.image();
    if (!g.domain().contains(img))
      throw OutOfDomainError("image of inner map leaves outer domain near " + hp.domain.str());
    if (hp.slope == 0) {
      const Rational v = g.eval(hp.intercept);
      out.push_back(AffinePiece1D{hp.domain, 0, v});
    } else {
      // Split hp.domain at preimages of g's breakpoints inside img.
      std::vector<Rational> cuts{hp.domain.lo};
      std::vector<Rational> inner;
      for (const auto& gp : g.pieces()) {
        const Rational& b = gp.domain.lo;
        if (b > img.lo && b < img.hi) inner.push_back((b - hp.intercept) / hp.slope);
      }
      std::sort(inner.begin(), inner.end());
      for (auto& c : inner)
        if (c > cuts.back()) cuts.push_back(c);
      if (hp.domain.hi > cuts.back()) cuts.push_back(hp.domain.hi);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Interval sub(cuts[i], cuts[i + 1]);
        const Rational mid = sub.midpoint();
        const auto& gp = g.pieces()[g.piece_index_at(hp.slope * mid + hp.intercept)];
        out.push_back(AffinePiece1D{sub, gp.slope * hp.slope,
                                    gp.slope * hp.intercept + gp.intercept});
        if (out.size() > piece_cap)
          throw PieceBudgetExceeded("composition exceeds piece budget " +
                                    std::to_string(piece_cap));
      }
      if (cuts.size() == 1) {
        // Point-domain piece.
        out.push_back(AffinePiece1D{hp.domain, 0, g.eval(hp.at(hp.domain.lo))});
      }
    }
  }
  // Merge equal-coefficient neighbors to keep representations small.
  std::vector<AffinePiece1D> merged;
  for (auto& p : out) {
    if (!merged.empty() && merged.back().slope == p.slope &&
        merged.back().intercept == p.intercept && merged.back().domain.hi == p.domain.lo) {
      merged.back().domain = Interval(merged.back().domain.lo, p.domain.hi);
    } else {
      merged.push_back(p);
    }
  }
  return PiecewiseAffineMap1D(h.domain(), std::move(merged));
}

PiecewiseAffineMap1D conjugate_map(const PiecewiseAffineMap1D& g, const Rational& M,
                                   const Rational& m) {
  if (M == 0) throw std::invalid_argument("conjugacy scale M must be nonzero");
  auto pull = [&](const Rational& x) -> Rational { return x / M + m; };
  std::vector<AffinePiece1D> out;
  for (const auto& p : g.pieces()) {
    Rational a = pull(p.domain.lo), b = pull(p.domain.hi);
    if (a > b) std::swap(a, b);
    // g'(y) = M^{-1}(s*(M(y-m)) + c) + m = s*y + ((1-s)m + c/M).
    out.push_back(AffinePiece1D{Interval(a, b), p.slope, (1 - p.slope) * m + p.intercept / M});
  }
  Rational dl = pull(g.domain().lo), dh = pull(g.domain().hi);
  if (dl > dh) std::swap(dl, dh);
  return PiecewiseAffineMap1D(Interval(dl, dh), std::move(out));
}

}  // namespace lipshadow
