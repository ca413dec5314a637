#include "lipshadow/example.hpp"

#include <algorithm>
#include <set>

#include "lipshadow/errors.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/parallel.hpp"

namespace lipshadow {

Rational d_work() { return pow2(-10); }

std::vector<DWorkConstraint> d_work_constraints() {
  // Each constraint is "d <= limit"; the binding one is 1/696.
  return {
      {"base threshold d <= 1/24", Rational(1, 24)},
      {"5/24 + 4d < 1/3", Rational(1, 32)},
      {"5d tube around f^2(p) inside the contracting block", Rational(1, 78)},
      {"pre-crossing points inside H0(K1 d)", Rational(1, 240)},
      {"post-crossing left edge inside H1(K1 d)", Rational(1, 174)},
      {"confinement ceiling 7/6 + d inside H1(K1 d)", Rational(1, 696)},
      {"case-2 band inside H1(L1 d)", Rational(1, 72)},
  };
}

ExampleF0 build_f0() {
  const Interval I0(Rational(-7, 6), Rational(4, 3));
  std::vector<AffinePiece1D> pieces{
      {Interval(Rational(-7, 6), Rational(-1, 3)), Rational(1, 2), Rational(-1, 2)},
      {Interval(Rational(-1, 3), Rational(1, 3)), Rational(2), Rational(0)},
      {Interval(Rational(1, 3), Rational(4, 3)), Rational(1, 2), Rational(1, 2)},
  };
  PiecewiseAffineMap1D map(I0, std::move(pieces));

  HyperbolicAtlas1D atlas;
  atlas.lambda = Rational(1, 2);
  atlas.blocks.push_back(
      Block1D{"G0", Interval(Rational(-1, 3), Rational(1, 3)), BlockKind::Unstable, Rational(2)});
  atlas.blocks.push_back(
      Block1D{"G1", Interval(Rational(1, 3), Rational(29, 24)), BlockKind::Stable, Rational(1, 2)});

  ExampleF0 ex{std::move(map), std::move(atlas),
               derive_constants(Rational(1, 2), Rational(2), Rational(26), d_work()), I0,
               Interval(Rational(-27, 24), Rational(29, 24))};
  return ex;
}

// ---------------------------------------------------------------------------
// ScaledFamily
// ---------------------------------------------------------------------------

ScaledFamily::ScaledFamily()
    : domain_(Rational(-1), Rational(1)), core_(build_f0().map.restrict(domain_)) {}

long ScaledFamily::scale_of(const Rational& x) {
  if (!(x > 0 && x <= 1)) throw std::invalid_argument("scale lookup needs 0 < x <= 1");
  const long e = floor_log2(x);
  return pow2(e) == x ? -e : -e - 1;
}

std::shared_ptr<const PiecewiseAffineMap1D> ScaledFamily::scale_map(long n) const {
  if (n < 0) throw std::invalid_argument("scale index must be >= 0");
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(n);
    if (it != cache_.end()) return it->second;
  }
  const Rational N = scale_width(n);
  auto built = std::make_shared<const PiecewiseAffineMap1D>(
      conjugate_map(core_, Rational(1) / N, 3 * N));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = cache_.emplace(n, std::move(built));
  return it->second;
}

Rational ScaledFamily::eval(const Rational& x) const {
  if (!domain_.contains(x)) throw OutOfDomainError("x outside [-1, 1]");
  if (x == 0) return 0;
  if (x < 0) return -eval(-x);
  return scale_map(scale_of(x))->eval(x);
}

std::pair<Rational, Rational> ScaledFamily::eval_traced(const Rational& x) const {
  if (x == 0) throw std::invalid_argument("no single affine piece acts at 0");
  if (!domain_.contains(x)) throw OutOfDomainError("x outside [-1, 1]");
  if (x < 0) {
    auto [v, s] = eval_traced(-x);
    return {-v, s};
  }
  const auto m = scale_map(scale_of(x));
  const auto& piece = m->pieces()[m->piece_index_at(x)];
  return {piece.at(x), piece.slope};
}

Rational ScaledFamily::eval_inverse(const Rational& w) const {
  if (!domain_.contains(w)) throw OutOfDomainError("value outside [-1, 1]");
  if (w == 0) return 0;
  if (w < 0) return -eval_inverse(-w);
  // Each scale window (2N, 4N] is invariant, so the preimage lives in the
  // window of w itself.
  const auto m = scale_map(scale_of(w));
  for (const auto& piece : m->pieces()) {
    const Interval img = piece.image();
    if (img.contains(w)) return (w - piece.intercept) / piece.slope;
  }
  throw std::logic_error("inverse lookup missed every piece image");
}

ScaledFamily::PieceId ScaledFamily::piece_id(const Rational& x) const {
  if (!domain_.contains(x)) throw OutOfDomainError("x outside [-1, 1]");
  PieceId id;
  if (x == 0) return id;
  const Rational ax = rat_abs(x);
  id.sign = x > 0 ? 1 : -1;
  id.scale = scale_of(ax);
  id.piece = static_cast<int>(scale_map(id.scale)->piece_index_at(ax));
  return id;
}

PiecewiseAffineMap1D ScaledFamily::materialize(const Interval& window,
                                               std::size_t piece_cap) const {
  if (!domain_.contains(window))
    throw OutOfDomainError("window " + window.str() + " outside [-1, 1]");
  if (window.is_point()) {
    const Rational v = eval(window.lo);
    return PiecewiseAffineMap1D(window, {AffinePiece1D{window, 0, v}});
  }
  if (window.lo < 0 && window.hi > 0)
    throw PieceBudgetExceeded("window touches the accumulation point 0");
  if (window.hi <= 0) {
    // Odd reflection of the positive-side tiling.
    PiecewiseAffineMap1D pos = materialize(Interval(-window.hi, -window.lo), piece_cap);
    std::vector<AffinePiece1D> pieces;
    for (const auto& p : pos.pieces())
      pieces.push_back(
          AffinePiece1D{Interval(-p.domain.hi, -p.domain.lo), p.slope, -p.intercept});
    return PiecewiseAffineMap1D(window, std::move(pieces));
  }
  if (window.lo == 0)
    throw PieceBudgetExceeded("window touches the accumulation point 0");
  const long n_hi = scale_of(window.hi);
  const long n_lo = scale_of(window.lo);
  if (static_cast<std::size_t>(n_lo - n_hi + 1) * 3 > piece_cap)
    throw PieceBudgetExceeded("window spans too many scales for the piece budget");
  std::vector<AffinePiece1D> pieces;
  for (long n = n_lo; n >= n_hi; --n) {
    for (const auto& p : scale_map(n)->pieces()) {
      auto cut = p.domain.intersect(window);
      if (!cut || cut->is_point()) continue;
      pieces.push_back(AffinePiece1D{*cut, p.slope, p.intercept});
    }
  }
  return PiecewiseAffineMap1D(window, std::move(pieces));
}

MapRef ScaledFamily::ref() const {
  return MapRef{[this](const Rational& x) { return eval(x); }, domain_};
}

SegmentLadderEntry segment(const ScaledFamily& f, long n) {
  if (n < 1) throw std::invalid_argument("ladder segments start at n = 1");
  SegmentLadderEntry s;
  s.n = n;
  s.N = ScaledFamily::scale_width(n);
  s.alpha = 11 * s.N / 6;
  s.beta = 13 * s.N / 3;
  s.delta = s.N / 12;
  s.I = Interval(s.alpha, s.beta);
  s.I_mirror = Interval(-s.beta, -s.alpha);
  s.f_alpha = f.eval(s.alpha);
  s.f_beta = f.eval(s.beta);
  // f is increasing, so the image is the interval between endpoint images.
  s.image_inside = s.I.inflate(s.delta).contains(Interval(s.f_alpha, s.f_beta));
  return s;
}

// ---------------------------------------------------------------------------
// Lemma 4
// ---------------------------------------------------------------------------

TrichotomyCase classify_trichotomy(const ExampleF0& ex, const Pseudotrajectory& traj) {
  for (std::size_t k = 0; k < traj.points.size(); ++k)
    if (!ex.I0_prime.contains(traj.points[k]))
      throw PreconditionViolated("point " + std::to_string(k) +
                                 " outside the confinement window " + ex.I0_prime.str());
  const Rational d = traj.defect;
  const Rational quarter(1, 4), five12(5, 12), band_hi(29, 24);

  bool case1 = true, case2 = true;
  for (const auto& x : traj.points) {
    const Rational ax = rat_abs(x);
    case1 = case1 && ax <= quarter;
    case2 = case2 && ax >= five12 && ax <= band_hi;
  }
  if (case1) return {TrichotomyTag::Case1, -1};
  if (case2) return {TrichotomyTag::Case2, -1};

  const Rational pre_bound = Rational(5, 24) + 2 * d;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    const Rational ax = rat_abs(traj.points[k]);
    if (ax >= quarter && ax <= five12) {
      for (std::size_t i = 0; i < k; ++i)
        if (rat_abs(traj.points[i]) > pre_bound) return {TrichotomyTag::Escape, -1};
      return {TrichotomyTag::Case3, static_cast<long>(k)};
    }
  }
  return {TrichotomyTag::Escape, -1};
}

namespace {

ShadowResult from_lemma1(const BlockShadowResult& l1, const Rational& bound, const std::string& branch,
                         const std::string& block_id, long T) {
  ShadowResult res;
  res.z = l1.y;
  res.per_step_errors = l1.errors;
  res.bound_claimed = bound;
  res.certificate.itinerary.segments.push_back(ItinerarySegment{block_id, 0, T});
  res.certificate.y_points.push_back(l1.y);
  for (const auto& p : l1.orbit) res.certificate.survivors.push_back(Interval::point(p));
  res.certificate.branch = branch;
  return res;
}

ShadowResult mirror_result(ShadowResult res) {
  res.z = -res.z;
  for (auto& y : res.certificate.y_points) y = -y;
  for (auto& s : res.certificate.survivors) s = Interval(-s.hi, -s.lo);
  return res;
}

// Re-derives the per-step errors of z against the original trajectory with a
// fresh exact orbit; guards the odd-symmetry transfers.
void reverify_errors(const MapRef& map, ShadowResult& res, const Pseudotrajectory& traj) {
  Rational x = res.z;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    if (k > 0) x = map.eval(x);
    const Rational err = rat_abs(x - traj.points[k]);
    if (err != res.per_step_errors[k])
      throw std::logic_error("transferred errors disagree with a fresh orbit at step " +
                             std::to_string(k));
    if (err > res.bound_claimed)
      throw std::logic_error("error exceeds the claimed bound at step " + std::to_string(k));
  }
}

}  // namespace

ShadowResult trichotomy_shadow(const ExampleF0& ex, const Pseudotrajectory& traj) {
  const Rational d = traj.defect;
  if (d > d_work()) throw DTooLarge("defect " + rational_str(d) + " above d_work");
  const TrichotomyCase cls = classify_trichotomy(ex, traj);
  const long T = traj.T();

  switch (cls.tag) {
    case TrichotomyTag::Case1: {
      auto l1 = block_shadow(ex.map, ex.G0(), traj.points, d, ex.constants);
      return from_lemma1(l1, ex.constants.L1 * d, "case1", ex.G0().id, T);
    }
    case TrichotomyTag::Case2: {
      bool negative = traj.points[0] < 0;
      for (const auto& x : traj.points)
        if ((x < 0) != negative)
          throw PreconditionViolated("mixed-sign case-2 trajectory despite verified defect");
      const Pseudotrajectory work = negative ? traj.mirrored() : traj;
      auto l1 = block_shadow(ex.map, ex.G1(), work.points, d, ex.constants);
      ShadowResult res = from_lemma1(l1, ex.constants.L1 * d,
                                     negative ? "case2 (mirrored)" : "case2", ex.G1().id, T);
      if (negative) res = mirror_result(std::move(res));
      reverify_errors(map_ref(ex.map), res, traj);
      return res;
    }
    case TrichotomyTag::Case3: {
      const bool negative = traj.points[static_cast<std::size_t>(cls.k0)] < 0;
      const Pseudotrajectory work = negative ? traj.mirrored() : traj;
      BlockItinerary itin;
      try {
        itin = find_itinerary(work, ex.atlas, ex.constants);
      } catch (const NoItinerary& e) {
        throw DTooShort(std::string("case-3 window unusable: ") + e.what());
      }
      ShadowResult res = itinerary_shadow(ex.map, ex.atlas, ex.constants, work, itin);
      res.certificate.branch = negative ? "case3 (mirrored)" : "case3";
      if (negative) res = mirror_result(std::move(res));
      reverify_errors(map_ref(ex.map), res, traj);
      return res;
    }
    case TrichotomyTag::Escape:
      break;
  }
  throw DTooLarge("trichotomy failed: defect too large for the classification");
}

// ---------------------------------------------------------------------------
// Theorem 2 pipeline
// ---------------------------------------------------------------------------

Rational d0_global() { return d_work() / 12; }

ShadowResult family_shadow(const ScaledFamily& f, const ExampleF0& ex,
                             const Pseudotrajectory& traj) {
  const Rational d = traj.defect;
  if (d > d0_global())
    throw DTooLarge("defect " + rational_str(d) + " above the global threshold " +
                    rational_str(d0_global()));
  for (std::size_t k = 0; k < traj.points.size(); ++k)
    if (!f.domain().contains(traj.points[k]))
      throw OutOfDomainError("point " + std::to_string(k) + " outside [-1, 1]",
                             static_cast<long>(k));

  // Candidate ladder scales: |x| in I_n forces N_n within a factor-2.36 band,
  // so each point contributes at most a couple of scales.
  std::set<long> candidates;
  for (const auto& x : traj.points) {
    const Rational ax = rat_abs(x);
    if (ax == 0) continue;
    const long e = floor_log2(ax);
    for (long n = -e - 5; n <= -e + 2; ++n) {
      if (n < 1) continue;
      const Rational N = ScaledFamily::scale_width(n);
      if (11 * N / 6 <= ax && ax <= 13 * N / 3) candidates.insert(n);
    }
  }

  for (long n : candidates) {  // ascending: smallest eligible scale wins
    const Rational N = ScaledFamily::scale_width(n);
    if (d > N * d_work()) continue;  // rescaled defect would exceed d_work
    const Interval In(11 * N / 6, 13 * N / 3);
    const Interval In_mirror(-In.hi, -In.lo);
    bool inside = true, inside_mirror = true;
    for (const auto& x : traj.points) {
      inside = inside && In.contains(x);
      inside_mirror = inside_mirror && In_mirror.contains(x);
    }
    if (!inside && !inside_mirror) continue;

    const bool mirrored = !inside;
    const Pseudotrajectory work = mirrored ? traj.mirrored() : traj;
    ShadowResult res;
    try {
      res = shadow_via_conjugacy(
          Rational(1) / N, 3 * N, work, d_work(),
          [&](const Pseudotrajectory& inner) { return trichotomy_shadow(ex, inner); });
    } catch (const PreconditionViolated&) {
      continue;  // e.g. an overlap scale whose rescaling leaves the window
    } catch (const DTooShort&) {
      continue;
    } catch (const DTooLarge&) {
      continue;
    }
    res.certificate.branch = "segment n=" + std::to_string(n) + (mirrored ? " (mirrored)" : "");
    if (mirrored) res = mirror_result(std::move(res));
    reverify_errors(f.ref(), res, traj);
    return res;
  }

  // Rest-point branch: the trajectory must hug 0 within 44 d.
  const Rational bound = 44 * d;
  for (std::size_t k = 0; k < traj.points.size(); ++k)
    if (rat_abs(traj.points[k]) > bound)
      throw DTooLarge("point " + std::to_string(k) +
                      " is neither inside an eligible ladder segment nor within 44 d of 0");
  ShadowResult res;
  res.z = 0;
  for (const auto& x : traj.points) res.per_step_errors.push_back(rat_abs(x));
  res.bound_claimed = bound;
  res.certificate.survivors.assign(traj.points.size(), Interval::point(0));
  res.certificate.branch = "rest_point";
  return res;
}

// ---------------------------------------------------------------------------
// d_work sweep
// ---------------------------------------------------------------------------

DWorkReport validate_d_work(const ExampleF0& ex, long trials, std::uint64_t seed, int jobs) {
  DWorkReport report;
  report.d = d_work();
  report.trials = trials;
  const Rational d = report.d;

  struct Outcome {
    int violation = 0;
    int escape = 0;
    Rational ratio = 0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(trials));

  parallel_for(trials, jobs, [&](long i) {
    LatticeRng rng(seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull);
    const int kind = static_cast<int>(i % 5);
    GenOutput gen;
    try {
      switch (kind) {
        case 0:
          gen = gen_inblock(ex, "G0", rng.uniform_int(10, 120), d, seed + static_cast<std::uint64_t>(i));
          break;
        case 1:
          gen = gen_inblock(ex, "G1", rng.uniform_int(10, 120), d, seed + static_cast<std::uint64_t>(i));
          break;
        case 2:
          gen = gen_crossing(ex, d, rng.uniform_int(ex.constants.mu, 40),
                             rng.uniform_int(ex.constants.mu, 40),
                             seed + static_cast<std::uint64_t>(i));
          break;
        case 3:
          gen = gen_adversarial_drift(map_ref(ex.map),
                                      rng.uniform(Interval(Rational(1, 2), Rational(9, 8))),
                                      rng.uniform_int(10, 120), d);
          break;
        default: {
          // Escape through the expanding block: crossing is at least 6 steps
          // away from |x0| <= 2^-8, so the leading run always fits mu = 5.
          GenSpec spec;
          spec.kind = GenSpec::Kind::Perturbed;
          spec.x0 = rng.uniform(Interval(-pow2(-8), pow2(-8)));
          spec.T = rng.uniform_int(30, 120);
          spec.d_target = d;
          spec.seed = seed * 31 + static_cast<std::uint64_t>(i);
          gen = gen_perturbed(map_ref(ex.map), spec);
          break;
        }
      }
    } catch (const InfeasibleDesign&) {
      outcomes[static_cast<std::size_t>(i)].escape = 1;
      return;
    }
    try {
      ShadowResult res = trichotomy_shadow(ex, gen.traj);
      const Rational ratio = res.bound_claimed == 0
                                 ? Rational(0)
                                 : Rational(res.max_error() / res.bound_claimed);
      outcomes[static_cast<std::size_t>(i)].ratio = ratio;
      if (res.max_error() > res.bound_claimed)
        outcomes[static_cast<std::size_t>(i)].violation = 1;
      const Rational hard_cap = ex.constants.LL * gen.traj.defect;
      if (res.max_error() > hard_cap) outcomes[static_cast<std::size_t>(i)].violation = 1;
    } catch (const DTooLarge&) {
      outcomes[static_cast<std::size_t>(i)].escape = 1;
    } catch (const DTooShort&) {
      outcomes[static_cast<std::size_t>(i)].escape = 1;
    }
  });

  for (const auto& o : outcomes) {
    report.violations += o.violation;
    report.escapes += o.escape;
    report.worst_ratio = std::max(report.worst_ratio, o.ratio);
  }
  return report;
}

}  // namespace lipshadow
