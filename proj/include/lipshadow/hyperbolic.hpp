#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lipshadow/interval.hpp"
#include "lipshadow/map_nd.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/rational.hpp"

namespace lipshadow {

// ---------------------------------------------------------------------------
// 1D lane (exact). In one dimension a block is either purely stable
// (contracting, rate = the single A entry) or purely unstable (expanding,
// rate = the single B entry).
// ---------------------------------------------------------------------------

enum class BlockKind { Stable, Unstable };

struct Block1D {
  std::string id;
  Interval region;  // G_l
  BlockKind kind;
  Rational rate;  // A entry (stable) or B entry (unstable)
};

struct HyperbolicAtlas1D {
  std::vector<Block1D> blocks;
  Rational lambda;  // contraction rate in (0,1)

  const Block1D* find(const std::string& id) const;
  const Block1D& at(const std::string& id) const;
};

// Derived constants ledger. All fields exact; mu is the smallest integer
// with lambda^mu * K < 1.
struct ShadowingConstants {
  Rational lambda;
  Rational L0, L1, L2;
  Rational K, K1;
  Rational LL;  // L0*(L1 + 2K) + 1
  long mu = 0;
  Rational d0;
};

// Fills the ledger from (lambda, L0, K, d0). InvalidConstants unless
// lambda in (0,1), L0 >= 1, K >= L0 + 1, d0 > 0.
ShadowingConstants derive_constants(const Rational& lambda, const Rational& L0, const Rational& K,
                                    const Rational& d0);

// N(delta, p) in 1D: [p - delta, p + delta].
Interval neighborhood(const Rational& p, const Rational& delta);
BoxND neighborhood_nd(const PointND& p, double delta);

// H_l(delta): inward delta-shrink of the block region; empty when delta
// exceeds half the minimal extent.
std::optional<Interval> h_set(const Interval& region, const Rational& delta);
std::optional<BoxND> h_set_nd(const BoxND& region, double delta);

// Affine graph disk over the unstable coordinate. For an unstable 1D block
// the realized set is [anchor - d1, anchor + d1]; for a stable block it is
// the single point anchor + offset with |offset| <= min(d1, d2).
struct Disk1D {
  std::string block_id;
  Rational anchor;
  Rational d1;  // unstable radius
  Rational d2;  // stable bound
  Rational offset = 0;

  Interval realize(const Block1D& block) const;
  // Membership in the class D(delta1, delta2, anchor) for this block kind.
  bool in_class(const Block1D& block, const Rational& delta1, const Rational& delta2) const;
};

// Graph transform of Lemma-2 type: unstable radius grows by 1/lambda, stable
// bound shrinks by lambda, anchor moves to `image_anchor` (= f(anchor),
// supplied by the caller). PreconditionViolated if the disk is not anchored
// inside H_l(max(d1,d2)) or the image anchor leaves the block.
Disk1D map_disk(const Block1D& block, const Rational& lambda, const Disk1D& disk,
                const Rational& image_anchor);

// ---------------------------------------------------------------------------
// Condition 1 verification
// ---------------------------------------------------------------------------

struct BlockCheck {
  std::string block_id;
  bool norm_ok = false;
  std::string norm_detail;
  bool affine_ok = false;
  std::string affine_detail;
  bool ok() const { return norm_ok && affine_ok; }
};

struct TransitionPairCheck {
  std::string from, to;
  Rational d;
  bool feasible = false;  // admissible (p,q,r) exist at this d
  bool pass = true;
  Rational min_margin;  // over feasible configurations; meaningful when feasible
  Rational witness_p;
  std::string detail;
};

struct CertificateReport {
  bool pass = false;
  std::vector<BlockCheck> blocks;
  std::vector<TransitionPairCheck> condition2;
  std::string notes;
};

// Checks the norm bounds |A| <= lambda, |B^-1| <= lambda (exact in 1D) and
// the block-affine form: every map piece overlapping a block region in more
// than a point must carry the block's rate.
CertificateReport verify_block_form(const HyperbolicAtlas1D& atlas,
                                    const PiecewiseAffineMap1D& map);

// ---------------------------------------------------------------------------
// Condition 2
// ---------------------------------------------------------------------------

struct TransitionCheck {
  bool ok = false;
  Disk1D witness;
  std::string detail;
};

// Verifier for one configuration (p, q, r, disk, d): computes f^2(disk)
// exactly and tests that it contains a disk of class D(d, K d, r) in the
// target block. Preconditions (2.1)-(2.4) are checked and reported by name.
TransitionCheck check_transition(const PiecewiseAffineMap1D& map, const HyperbolicAtlas1D& atlas,
                             const ShadowingConstants& c, const Rational& p, const Rational& q,
                             const Rational& r, const Disk1D& disk, const Rational& d);

// Universal 1D check at a fixed d: for every ordered block pair, minimizes
// the containment margins exactly over all admissible (p, q, r) by
// breakpoint enumeration of the piecewise-affine margin functions.
// Requires a strictly increasing map.
std::vector<TransitionPairCheck> verify_transitions_universal(const PiecewiseAffineMap1D& map,
                                                        const HyperbolicAtlas1D& atlas,
                                                        const ShadowingConstants& c,
                                                        const Rational& d,
                                                        std::size_t piece_cap = 100000);

// ---------------------------------------------------------------------------
// nD lane (floating point, tolerance-certified)
// ---------------------------------------------------------------------------

struct SplittingND {
  std::vector<int> stable_axes;
  std::vector<int> unstable_axes;
};

struct BlockND {
  std::string id;
  BoxND region;
  SplittingND splitting;
  Eigen::MatrixXd A;  // s x s
  Eigen::MatrixXd B;  // u x u, invertible
};

struct DiskND {
  std::string block_id;
  PointND anchor;
  double d1 = 0, d2 = 0;
  Eigen::MatrixXd C;  // s x u graph slope
  Eigen::VectorXd c;  // s graph offset
};

struct AtlasND {
  std::vector<BlockND> blocks;
  double lambda = 0;
};

std::vector<BlockCheck> verify_block_form_nd(const AtlasND& atlas, const PiecewiseAffineMapND& map,
                                             double tol = PiecewiseAffineMapND::kDefaultBoundaryTol);

DiskND map_disk_nd(const BlockND& block, double lambda, const DiskND& disk,
                   const PointND& image_anchor);

}  // namespace lipshadow
