#pragma once

#include <map>
#include <memory>
#include <shared_mutex>

#include "lipshadow/hyperbolic.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/pseudotrajectory.hpp"
#include "lipshadow/shadow.hpp"

namespace lipshadow {

// The reference interval map: three pieces with slopes (1/2, 2, 1/2) on
// I0 = [-7/6, 4/3], fixed points {-1, 0, 1}, together with its two-block
// atlas and the derived constants ledger.
struct ExampleF0 {
  PiecewiseAffineMap1D map;
  HyperbolicAtlas1D atlas;
  ShadowingConstants constants;
  Interval I0;
  Interval I0_prime;  // confinement window [-27/24, 29/24]

  const Block1D& G0() const { return atlas.blocks[0]; }
  const Block1D& G1() const { return atlas.blocks[1]; }
};

// Working defect threshold for the reference map, 2^-10. Derived from the
// explicit inequalities the construction needs (see d_work_constraints) and
// validated by the adversarial sweep in validate_d_work.
Rational d_work();

struct DWorkConstraint {
  std::string name;
  Rational limit;  // d must be <= limit (or < limit; satisfied strictly here)
};
std::vector<DWorkConstraint> d_work_constraints();

ExampleF0 build_f0();

// ---------------------------------------------------------------------------
// The self-similar homeomorphism of [-1, 1] with nonisolated fixed point 0:
// scaled copies of the reference map on (2 N_n, 4 N_n], N_n = 2^{-(n+2)},
// odd-extended, with f(0) = 0. Pieces materialize lazily per scale.
// ---------------------------------------------------------------------------
class ScaledFamily {
public:
  ScaledFamily();

  const Interval& domain() const { return domain_; }

  static Rational scale_width(long n) { return pow2(-(n + 2)); }  // N_n

  // The unique n >= 0 with x in (2 N_n, 4 N_n]; requires 0 < x <= 1.
  static long scale_of(const Rational& x);

  Rational eval(const Rational& x) const;

  // Value together with the local piece slope; x must be nonzero (the map
  // is not affine at the accumulation point).
  std::pair<Rational, Rational> eval_traced(const Rational& x) const;

  // The unique preimage (the map is an increasing bijection of [-1, 1]).
  Rational eval_inverse(const Rational& w) const;

  // Identifies the affine piece acting at x (sign, scale, piece-in-scale);
  // used to detect breakpoint-free brackets during exact optimization.
  struct PieceId {
    int sign = 0;  // 0 marks x == 0
    long scale = 0;
    int piece = 0;
    bool operator==(const PieceId&) const = default;
  };
  PieceId piece_id(const Rational& x) const;

  // Three-piece copy on [2 N_n, 4 N_n]; cached, atomically published.
  std::shared_ptr<const PiecewiseAffineMap1D> scale_map(long n) const;

  // Finite tiling of a window that stays away from 0 (PieceBudgetExceeded
  // when the window forces more pieces than the cap, e.g. contains 0).
  PiecewiseAffineMap1D materialize(const Interval& window, std::size_t piece_cap = 100000) const;

  MapRef ref() const;

private:
  Interval domain_;
  PiecewiseAffineMap1D core_;  // reference map restricted to [-1, 1]
  mutable std::shared_mutex mutex_;
  mutable std::map<long, std::shared_ptr<const PiecewiseAffineMap1D>> cache_;
};

// Ladder segment I_n = [11 N_n / 6, 13 N_n / 3] with delta(n) = N_n / 12;
// f maps I_n into its delta(n)-neighborhood (verified by endpoint images).
struct SegmentLadderEntry {
  long n = 0;
  Rational N;
  Rational alpha, beta;
  Rational delta;
  Interval I;
  Interval I_mirror;
  Rational f_alpha, f_beta;
  bool image_inside = false;
};

SegmentLadderEntry segment(const ScaledFamily& f, long n);

// ---------------------------------------------------------------------------
// Trichotomy and the shadowing pipelines
// ---------------------------------------------------------------------------
enum class TrichotomyTag { Case1, Case2, Case3, Escape };

struct TrichotomyCase {
  TrichotomyTag tag = TrichotomyTag::Escape;
  long k0 = -1;  // first crossing index for Case3
};

// Exact classification of a pseudotrajectory inside the confinement window:
// Case1: |x_k| <= 1/4 throughout; Case2: 5/12 <= |x_k| <= 29/24 throughout;
// Case3: first index k0 with 1/4 <= |x_k0| <= 5/12 and |x_k| <= 5/24 + 2d
// before it; Escape otherwise (defect too large for the trichotomy).
TrichotomyCase classify_trichotomy(const ExampleF0& ex, const Pseudotrajectory& traj);

// Dispatches on the classification: Case1/Case2 run the in-block solver
// (bound 2d), Case3 builds the two-segment itinerary and runs the gluing
// construction (bound 109d), negative-side crossings via odd symmetry.
ShadowResult trichotomy_shadow(const ExampleF0& ex, const Pseudotrajectory& traj);

// Full pipeline for the scaled family: a trajectory confined in an eligible
// ladder segment is shadowed through the rescaling with bound 109d; a
// trajectory hugging the rest point is shadowed by z = 0 with bound 44d
// (checked exactly). DTooLarge otherwise.
ShadowResult family_shadow(const ScaledFamily& f, const ExampleF0& ex,
                             const Pseudotrajectory& traj);

Rational d0_global();  // d_work / 12

// Adversarial sweep accepting the d_work candidate: mixed case-1/2/3 and
// drift trajectories at exactly d = d_work, constructive bounds checked on
// every trial.
struct DWorkReport {
  Rational d = 0;
  long trials = 0;
  long violations = 0;
  long escapes = 0;
  Rational worst_ratio = 0;  // max over trials of max_error / (bound for the branch)
};
DWorkReport validate_d_work(const ExampleF0& ex, long trials, std::uint64_t seed, int jobs = 1);

}  // namespace lipshadow
