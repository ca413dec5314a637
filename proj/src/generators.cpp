#include "lipshadow/generators.hpp"

#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"

namespace lipshadow {

namespace {
constexpr std::uint64_t kLattice = 1ull << 40;
}

std::uint64_t LatticeRng::draw_below(std::uint64_t bound) {
  // Rejection sampling keeps the distribution exactly uniform.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

Rational LatticeRng::noise(const Rational& d) {
  if (d < 0) throw std::invalid_argument("noise amplitude must be >= 0");
  if (d == 0) return 0;
  const std::uint64_t j = draw_below(2 * kLattice + 1);  // 0 .. 2*2^40
  const long off = static_cast<long>(j) - static_cast<long>(kLattice);
  return d * Rational(off) / Rational(static_cast<unsigned long>(kLattice));
}

Rational LatticeRng::uniform(const Interval& range) {
  if (range.is_point()) return range.lo;
  const std::uint64_t j = draw_below(kLattice + 1);
  return range.lo + range.length() * Rational(static_cast<unsigned long>(j)) /
                        Rational(static_cast<unsigned long>(kLattice));
}

long LatticeRng::uniform_int(long lo, long hi) {
  if (lo > hi) throw std::invalid_argument("empty integer range");
  return lo + static_cast<long>(draw_below(static_cast<std::uint64_t>(hi - lo + 1)));
}

namespace {

Rational clamp_to(const Interval& dom, const Rational& x, bool* clipped) {
  if (x < dom.lo) {
    *clipped = true;
    return dom.lo;
  }
  if (x > dom.hi) {
    *clipped = true;
    return dom.hi;
  }
  return x;
}

}  // namespace

GenOutput gen_perturbed(const MapRef& map, const GenSpec& spec) {
  if (spec.T < 1) throw std::invalid_argument("T must be >= 1");
  LatticeRng rng(spec.seed);
  GenOutput out;
  std::vector<Rational> pts{spec.x0};
  pts.reserve(static_cast<std::size_t>(spec.T) + 1);
  for (long k = 0; k < spec.T; ++k) {
    if (!map.domain.contains(pts.back()))
      throw OutOfDomainError("state left the domain at step " + std::to_string(k), k);
    Rational next = map.eval(pts.back()) + rng.noise(spec.d_target);
    bool clip = false;
    next = clamp_to(map.domain, next, &clip);
    if (clip) {
      out.clipped = true;
      ++out.clip_count;
    }
    pts.push_back(std::move(next));
  }
  out.traj = measure_defect(map, std::move(pts));
  return out;
}

GenOutput gen_constant(const MapRef& map, const Rational& x0, long T) {
  GenOutput out;
  out.traj = measure_defect(map, std::vector<Rational>(static_cast<std::size_t>(T) + 1, x0));
  return out;
}

GenOutput gen_adversarial_drift(const MapRef& map, const Rational& x0, long T,
                                const Rational& d_target) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  GenOutput out;
  std::vector<Rational> pts{x0};
  Rational reference = x0;  // unperturbed orbit
  for (long k = 0; k < T; ++k) {
    if (!map.domain.contains(pts.back()))
      throw OutOfDomainError("state left the domain at step " + std::to_string(k), k);
    reference = map.eval(reference);
    const Rational base = map.eval(pts.back());
    const Rational up = base + d_target, down = base - d_target;
    Rational next = rat_abs(up - reference) >= rat_abs(down - reference) ? up : down;
    bool clip = false;
    next = clamp_to(map.domain, next, &clip);
    if (clip) {
      out.clipped = true;
      ++out.clip_count;
    }
    pts.push_back(std::move(next));
  }
  out.traj = measure_defect(map, std::move(pts));
  return out;
}

GenOutput gen_crossing(const ExampleF0& ex, const Rational& d_target, long lead, long tail,
                       std::uint64_t seed) {
  const ShadowingConstants& c = ex.constants;
  if (lead < c.mu || tail < c.mu)
    throw InfeasibleDesign("lead and tail must be at least mu = " + std::to_string(c.mu));
  if (d_target > c.d0)
    throw InfeasibleDesign("d_target above the working threshold " + rational_str(c.d0));
  LatticeRng rng(seed);
  // When the leading run has no slack (lead == mu), keep the crossing point
  // inside H0(K1 d) so the greedy run reaches it; otherwise sample the full
  // crossing band [1/4, 5/12].
  const Rational quarter(1, 4);
  const Rational hi = lead == c.mu ? Rational(Rational(1, 3) - (c.K1 + 2) * d_target)
                                   : Rational(5, 12);
  if (hi <= quarter) throw InfeasibleDesign("crossing band empty at this d");
  const Rational xk0 = rng.uniform(Interval(quarter, hi));

  // Two extra forward steps absorb the transition gap, keeping at least
  // `tail` trailing steps inside the contracting run.
  const long fwd = tail + 2;
  std::vector<Rational> pts(static_cast<std::size_t>(lead + fwd) + 1);
  pts[static_cast<std::size_t>(lead)] = xk0;
  // Backward through the expanding piece: x_{k-1} = (x_k - e)/2 maps
  // exactly onto x_k - e.
  for (long k = lead; k > 0; --k)
    pts[static_cast<std::size_t>(k) - 1] =
        (pts[static_cast<std::size_t>(k)] - rng.noise(d_target)) / 2;
  for (long k = lead; k < lead + fwd; ++k)
    pts[static_cast<std::size_t>(k) + 1] =
        ex.map.eval(pts[static_cast<std::size_t>(k)]) + rng.noise(d_target);

  GenOutput out;
  out.traj = measure_defect(ex.map, std::move(pts));
  TrichotomyCase cls = classify_trichotomy(ex, out.traj);
  if (cls.tag != TrichotomyTag::Case3 || cls.k0 != lead)
    throw InfeasibleDesign("crossing design failed to classify as a case-3 trajectory");
  return out;
}

GenOutput gen_inblock(const ExampleF0& ex, const std::string& block_id, long T,
                      const Rational& d_target, std::uint64_t seed) {
  const Block1D& block = ex.atlas.at(block_id);
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  LatticeRng rng(seed);
  GenOutput out;
  if (block.kind == BlockKind::Unstable) {
    // Build backward from a free endpoint; halving keeps every point inside.
    std::vector<Rational> pts(static_cast<std::size_t>(T) + 1);
    pts.back() = rng.uniform(Interval(Rational(-1, 4), Rational(1, 4)));
    for (long k = T; k > 0; --k)
      pts[static_cast<std::size_t>(k) - 1] =
          (pts[static_cast<std::size_t>(k)] - rng.noise(d_target)) / block.rate;
    out.traj = measure_defect(ex.map, std::move(pts));
  } else {
    GenSpec spec;
    spec.kind = GenSpec::Kind::Perturbed;
    spec.x0 = rng.uniform(Interval(Rational(1, 2), Rational(9, 8)));
    spec.T = T;
    spec.d_target = d_target;
    spec.seed = seed ^ 0x9e3779b97f4a7c15ull;
    out = gen_perturbed(map_ref(ex.map), spec);
  }
  return out;
}

GenOutput generate(const MapRef& map, const ExampleF0& ex, const GenSpec& spec) {
  switch (spec.kind) {
    case GenSpec::Kind::Perturbed:
      return gen_perturbed(map, spec);
    case GenSpec::Kind::Constant:
      return gen_constant(map, spec.x0, spec.T);
    case GenSpec::Kind::AdversarialDrift:
      return gen_adversarial_drift(map, spec.x0, spec.T, spec.d_target);
    case GenSpec::Kind::Crossing:
      return gen_crossing(ex, spec.d_target, spec.lead, spec.tail, spec.seed);
  }
  throw std::invalid_argument("unknown generator kind");
}

}  // namespace lipshadow
