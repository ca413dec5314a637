#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lipshadow/hyperbolic.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/pseudotrajectory.hpp"

namespace lipshadow {

struct ItinerarySegment {
  std::string block_id;
  long m = 0, n = 0;  // covered index range [m, n]
  long length() const { return n - m; }
};

// Block visit schedule with 2-step gaps: m_{j+1} = n_j + 2, adjacent labels
// distinct, every segment at least mu steps long.
struct BlockItinerary {
  std::vector<ItinerarySegment> segments;
  long t() const { return static_cast<long>(segments.size()) - 1; }
};

struct BlockShadowResult {
  Rational y;
  std::vector<Rational> errors;  // |f^j(y) - x_j|, j = 0..m
  std::vector<Rational> orbit;   // f^j(y)
  Rational max_error() const;
};

// Constructive in-block shadowing: stable coordinates start at zero and run
// forward, unstable coordinates solve the backward geometric sum; the
// resulting orbit errors are verified exactly against the bound L1*d.
BlockShadowResult block_shadow(const PiecewiseAffineMap1D& map, const Block1D& block,
                           std::span<const Rational> segment, const Rational& d,
                           const ShadowingConstants& c);

struct DiskRefinement {
  Disk1D d_star;                  // in D(Kd, d, f^m(y))
  Interval d_prime;               // surviving subset of the input disk
  std::vector<Interval> forward;  // clipped forward sets, times 0..m
  std::vector<Interval> backward; // pullback chain, f(backward[k]) = backward[k+1]
};

// Disk refinement inside one block: push the disk forward m steps clipping
// the expanding direction at radius K*d, then pull the final disk back.
// All sets are exact intervals.
DiskRefinement refine_disk(const PiecewiseAffineMap1D& map, const Block1D& block,
                           const ShadowingConstants& c, const Disk1D& disk, const Rational& y,
                           long m, const Rational& d);

// Greedy maximal runs through the H-sets at radius K1*d with 2-step gaps.
// NoItinerary reports the first uncovered index or a too-short run.
BlockItinerary find_itinerary(const Pseudotrajectory& traj, const HyperbolicAtlas1D& atlas,
                              const ShadowingConstants& c);

struct ShadowCertificate {
  BlockItinerary itinerary;
  std::vector<Rational> y_points;   // Lemma-1 anchors per segment
  std::vector<Interval> survivors;  // nested interval at every time step
  std::string branch;               // pipeline tag ("case3", "segment n=2", ...)
};

struct ShadowResult {
  Rational z;
  std::vector<Rational> per_step_errors;
  Rational bound_claimed;
  ShadowCertificate certificate;
  Rational max_error() const;
};

// The gluing construction: Lemma 1 per segment, disk refinement within
// blocks, Condition-2 transitions across the 2-step gaps, exact backward
// recovery of z. Errors are verified exactly: interior steps within
// (L1 + 2K)d, gap steps within LL*d.
ShadowResult itinerary_shadow(const PiecewiseAffineMap1D& map, const HyperbolicAtlas1D& atlas,
                             const ShadowingConstants& c, const Pseudotrajectory& traj,
                             const BlockItinerary& itinerary);

// Replays every containment recorded in a certificate: survivors stay inside
// the forward image of their predecessor. Returns false with a message on
// the first violated inclusion.
bool replay_certificate(const PiecewiseAffineMap1D& map, const ShadowResult& result,
                        std::string* why = nullptr);

using Shadower = std::function<ShadowResult(const Pseudotrajectory&)>;

// Lemma-5 transfer: map the trajectory through x = M(y - m), shadow at
// defect M*d with `shadower`, and pull the result back through
// p' = M^{-1} p + m. Errors scale exactly by M^{-1}.
ShadowResult shadow_via_conjugacy(const Rational& M, const Rational& m_shift,
                                  const Pseudotrajectory& traj, const Rational& inner_d0,
                                  const Shadower& shadower);

}  // namespace lipshadow
