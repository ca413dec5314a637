#include "lipshadow/shadow.hpp"

#include <algorithm>

#include "lipshadow/errors.hpp"

namespace lipshadow {

Rational BlockShadowResult::max_error() const {
  Rational best = 0;
  for (const auto& e : errors) best = std::max(best, e);
  return best;
}

Rational ShadowResult::max_error() const {
  Rational best = 0;
  for (const auto& e : per_step_errors) best = std::max(best, e);
  return best;
}

BlockShadowResult block_shadow(const PiecewiseAffineMap1D& map, const Block1D& block,
                           std::span<const Rational> segment, const Rational& d,
                           const ShadowingConstants& c) {
  if (segment.empty()) throw std::invalid_argument("empty trajectory segment");
  if (d < 0) throw std::invalid_argument("negative defect");
  const long m = static_cast<long>(segment.size()) - 1;

  auto H = h_set(block.region, c.L1 * d);
  std::vector<std::string> offending;
  for (long j = 0; j < m; ++j)
    if (!H || !H->contains(segment[static_cast<std::size_t>(j)]))
      offending.push_back(std::to_string(j));
  if (!offending.empty()) {
    std::string msg = "points outside H_l(L1 d) at indices:";
    for (auto& s : offending) msg += " " + s;
    throw PreconditionViolated(msg, offending);
  }

  std::vector<Rational> e;
  e.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    e.push_back(map.eval(segment[static_cast<std::size_t>(i)]) -
                segment[static_cast<std::size_t>(i) + 1]);
    if (rat_abs(e.back()) > d)
      throw PreconditionViolated("step " + std::to_string(i) + " defect exceeds d");
  }

  Rational y = segment[0];
  if (block.kind == BlockKind::Unstable) {
    // eta_0 = -sum_i B^{-(i+1)} e_i, evaluated backward Horner-style.
    Rational acc = 0;
    for (long i = m - 1; i >= 0; --i) acc = (acc - e[static_cast<std::size_t>(i)]) / block.rate;
    y += acc;
  }

  BlockShadowResult res;
  res.y = y;
  res.orbit = map.iterate(y, m);
  const Rational bound = c.L1 * d;
  for (long j = 0; j <= m; ++j) {
    res.errors.push_back(rat_abs(res.orbit[static_cast<std::size_t>(j)] -
                                 segment[static_cast<std::size_t>(j)]));
    if (res.errors.back() > bound)
      throw PreconditionViolated(
          "orbit error exceeds L1 d at step " + std::to_string(j) +
          "; the map is not block-affine on the visited neighborhoods");
  }
  return res;
}

namespace {

// The preimage component intersecting `constraint`; prefers the one holding
// `anchor` when supplied, else the leftmost. The intersection with the
// constraint is returned.
Interval pull_back(const PiecewiseAffineMap1D& map, const Interval& target,
                   const Interval& constraint, const Rational* anchor) {
  std::optional<Interval> leftmost;
  for (const auto& comp : map.preimage(target)) {
    auto cut = comp.intersect(constraint);
    if (!cut) continue;
    if (anchor && cut->contains(*anchor)) return *cut;
    if (!leftmost) leftmost = cut;
  }
  if (anchor && leftmost)
    return *leftmost;  // anchor fell on a component edge; any component is sound
  if (leftmost) return *leftmost;
  throw std::logic_error("pull_back found no preimage inside the constraint");
}

}  // namespace

DiskRefinement refine_disk(const PiecewiseAffineMap1D& map, const Block1D& block,
                           const ShadowingConstants& c, const Disk1D& disk, const Rational& y,
                           long m, const Rational& d) {
  if (m < 0) throw std::invalid_argument("m must be >= 0");
  std::vector<std::string> bad;
  const Rational Kd = c.K * d;
  if (rat_pow(c.lambda, m) * c.K >= 1) bad.push_back("(11)");
  if (disk.block_id != block.id || disk.anchor != y || !disk.in_class(block, d, Kd))
    bad.push_back("(disk class)");
  std::vector<Rational> orbit;
  try {
    orbit = map.iterate(y, m);
  } catch (const OutOfDomainError&) {
    bad.push_back("(10)");
  }
  if (!orbit.empty()) {
    for (long k = 0; k <= m; ++k) {
      const Interval nbh = neighborhood(orbit[static_cast<std::size_t>(k)], Kd);
      if (!block.region.contains(nbh)) {
        bad.push_back("(10)");
        break;
      }
    }
  }
  if (!bad.empty()) {
    std::string msg = "Lemma 3 hypotheses failed:";
    for (auto& s : bad) msg += " " + s;
    throw PreconditionViolated(msg, bad);
  }

  DiskRefinement out;
  if (block.kind == BlockKind::Unstable) {
    std::vector<Interval> J{Interval(y - disk.d1, y + disk.d1)};
    for (long k = 1; k <= m; ++k) {
      Interval img = map.image(J.back());
      auto clip = img.intersect(neighborhood(orbit[static_cast<std::size_t>(k)], Kd));
      if (!clip) throw std::logic_error("forward image lost the orbit center");
      J.push_back(*clip);
    }
    const Interval full = neighborhood(orbit[static_cast<std::size_t>(m)], Kd);
    if (!(J.back() == full))
      throw PreconditionViolated(
          "expanded image does not cover the K d disk; map expansion below 1/lambda");
    std::vector<Interval> P(static_cast<std::size_t>(m) + 1);
    P[static_cast<std::size_t>(m)] = J.back();
    for (long k = m - 1; k >= 0; --k) {
      const Rational& anchor = orbit[static_cast<std::size_t>(k)];
      P[static_cast<std::size_t>(k)] = pull_back(map, P[static_cast<std::size_t>(k) + 1],
                                                 J[static_cast<std::size_t>(k)], &anchor);
    }
    out.d_star = Disk1D{block.id, orbit[static_cast<std::size_t>(m)], Kd, d, 0};
    out.d_prime = P[0];
    out.forward = std::move(J);
    out.backward = std::move(P);
  } else {
    const Rational w = disk.anchor + disk.offset;
    auto worbit = map.iterate(w, m);
    std::vector<Interval> J;
    for (long k = 0; k <= m; ++k) {
      if (rat_abs(worbit[static_cast<std::size_t>(k)] - orbit[static_cast<std::size_t>(k)]) > Kd)
        throw PreconditionViolated("stable orbit escapes the K d tube; map not contracting");
      J.push_back(Interval::point(worbit[static_cast<std::size_t>(k)]));
    }
    const Rational final_off =
        worbit[static_cast<std::size_t>(m)] - orbit[static_cast<std::size_t>(m)];
    if (rat_abs(final_off) > d)
      throw PreconditionViolated("stable contraction left an offset above d");
    out.d_star = Disk1D{block.id, orbit[static_cast<std::size_t>(m)], Kd, d, final_off};
    out.d_prime = Interval::point(w);
    out.backward = J;
    out.forward = std::move(J);
  }
  return out;
}

BlockItinerary find_itinerary(const Pseudotrajectory& traj, const HyperbolicAtlas1D& atlas,
                              const ShadowingConstants& c) {
  const Rational d = traj.defect;
  if (d > c.d0) throw PreconditionViolated("defect exceeds d0");
  const long T = traj.T();
  std::vector<std::optional<Interval>> H;
  H.reserve(atlas.blocks.size());
  for (const auto& b : atlas.blocks) H.push_back(h_set(b.region, c.K1 * d));

  auto inside = [&](std::size_t b, long k) {
    return H[b] && H[b]->contains(traj.points[static_cast<std::size_t>(k)]);
  };

  BlockItinerary it;
  long k = 0;
  while (true) {
    std::size_t best = atlas.blocks.size();
    long best_len = 0;
    for (std::size_t b = 0; b < atlas.blocks.size(); ++b) {
      if (!inside(b, k)) continue;
      long len = 1;
      while (k + len <= T && inside(b, k + len)) ++len;
      if (len > best_len) {
        best_len = len;
        best = b;
      }
    }
    if (best == atlas.blocks.size())
      throw NoItinerary("index " + std::to_string(k) + " is outside every H-set", k);
    const long n = k + best_len - 1;
    if (!it.segments.empty() && it.segments.back().block_id == atlas.blocks[best].id)
      throw NoItinerary("adjacent runs fall in the same block at index " + std::to_string(k), k);
    it.segments.push_back(ItinerarySegment{atlas.blocks[best].id, k, n});
    if (n == T) break;
    if (n + 2 > T)
      throw NoItinerary("final point is not covered by a run", T);
    k = n + 2;
  }
  for (std::size_t j = 0; j < it.segments.size(); ++j)
    if (it.segments[j].length() < c.mu)
      throw NoItinerary("segment " + std::to_string(j) + " shorter than mu = " +
                            std::to_string(c.mu),
                        it.segments[j].m);
  return it;
}

namespace {

void validate_itinerary(const BlockItinerary& it, const Pseudotrajectory& traj,
                        const HyperbolicAtlas1D& atlas, const ShadowingConstants& c) {
  std::vector<std::string> bad;
  if (it.segments.empty()) throw PreconditionViolated("empty itinerary");
  if (it.segments.front().m != 0) bad.push_back("m_0 != 0");
  if (it.segments.back().n != traj.T()) bad.push_back("n_t != T");
  for (std::size_t j = 0; j < it.segments.size(); ++j) {
    const auto& s = it.segments[j];
    if (!atlas.find(s.block_id)) bad.push_back("unknown block " + s.block_id);
    if (s.length() < c.mu) bad.push_back("(b): segment " + std::to_string(j) + " shorter than mu");
    if (j + 1 < it.segments.size()) {
      if (it.segments[j + 1].m != s.n + 2)
        bad.push_back("gap between segments " + std::to_string(j) + "," + std::to_string(j + 1) +
                      " is not 2");
      if (it.segments[j + 1].block_id == s.block_id)
        bad.push_back("adjacent segments share block " + s.block_id);
    }
  }
  const Rational K1d = c.K1 * traj.defect;
  for (const auto& s : it.segments) {
    const Block1D* b = atlas.find(s.block_id);
    if (!b) continue;
    auto H = h_set(b->region, K1d);
    for (long k = s.m; k <= s.n; ++k)
      if (!H || !H->contains(traj.points[static_cast<std::size_t>(k)])) {
        bad.push_back("(a): x_" + std::to_string(k) + " outside H(K1 d) of " + s.block_id);
        break;
      }
  }
  if (!bad.empty()) {
    std::string msg = "itinerary invalid:";
    for (auto& s : bad) msg += " " + s + ";";
    throw PreconditionViolated(msg, bad);
  }
}

}  // namespace

ShadowResult itinerary_shadow(const PiecewiseAffineMap1D& map, const HyperbolicAtlas1D& atlas,
                             const ShadowingConstants& c, const Pseudotrajectory& traj,
                             const BlockItinerary& itinerary) {
  const Rational d = traj.defect;
  if (d > c.d0) throw PreconditionViolated("defect exceeds d0", {"d<=d0"});
  validate_itinerary(itinerary, traj, atlas, c);
  const long t = itinerary.t();
  const long T = traj.T();
  const Rational Kd = c.K * d;

  std::vector<BlockShadowResult> l1;
  l1.reserve(itinerary.segments.size());
  for (const auto& seg : itinerary.segments) {
    const Block1D& blk = atlas.at(seg.block_id);
    std::span<const Rational> pts(traj.points.data() + seg.m,
                                  static_cast<std::size_t>(seg.length()) + 1);
    l1.push_back(block_shadow(map, blk, pts, d, c));
  }

  ShadowResult res;
  res.certificate.itinerary = itinerary;
  for (const auto& r : l1) res.certificate.y_points.push_back(r.y);

  if (t == 0) {
    res.z = l1[0].y;
    res.per_step_errors = l1[0].errors;
    res.bound_claimed = c.L1 * d;
    for (const auto& p : l1[0].orbit) res.certificate.survivors.push_back(Interval::point(p));
    res.certificate.branch = "single-segment";
    return res;
  }

  // Eq.-(14)-style inclusions: the K d tubes around the Lemma-1 orbits stay
  // inside their blocks.
  for (std::size_t j = 0; j < l1.size(); ++j) {
    const Block1D& blk = atlas.at(itinerary.segments[j].block_id);
    for (const auto& pt : l1[j].orbit)
      if (!blk.region.contains(neighborhood(pt, Kd)))
        throw PreconditionViolated("K d tube around segment " + std::to_string(j) +
                                   " leaves its block");
  }

  // Disk chain: refine within each block, certify each 2-step transition.
  std::vector<DiskRefinement> l3(static_cast<std::size_t>(t) + 1);
  Disk1D cur{itinerary.segments[0].block_id, l1[0].y, d, Kd, 0};
  for (long j = 0; j <= t; ++j) {
    const auto& seg = itinerary.segments[static_cast<std::size_t>(j)];
    const Block1D& blk = atlas.at(seg.block_id);
    l3[static_cast<std::size_t>(j)] =
        refine_disk(map, blk, c, cur, l1[static_cast<std::size_t>(j)].y, seg.length(), d);
    if (j == t) break;
    const Rational& p = traj.points[static_cast<std::size_t>(seg.n)];
    const Rational& q = l1[static_cast<std::size_t>(j)].orbit.back();
    const Rational& r = l1[static_cast<std::size_t>(j) + 1].y;
    if (rat_abs(p - q) > c.L1 * d)
      throw PreconditionViolated("|p - q| exceeds L1 d at transition " + std::to_string(j));
    const Rational f2p = map.eval(map.eval(p));
    if (rat_abs(f2p - r) > c.L2 * d)
      throw PreconditionViolated("|f^2(p) - r| exceeds L2 d at transition " + std::to_string(j));
    TransitionCheck cc =
        check_transition(map, atlas, c, p, q, r, l3[static_cast<std::size_t>(j)].d_star, d);
    if (!cc.ok) throw TransitionFailed("transition " + std::to_string(j) + ": " + cc.detail, j);
    if (cc.witness.block_id != itinerary.segments[static_cast<std::size_t>(j) + 1].block_id)
      throw TransitionFailed("transition " + std::to_string(j) + " lands in block " +
                                 cc.witness.block_id + " instead of the itinerary block",
                             j);
    cur = cc.witness;
  }

  // Backward recovery of the surviving interval at every time step.
  std::vector<Interval> S(static_cast<std::size_t>(T) + 1);
  {
    const auto& seg = itinerary.segments[static_cast<std::size_t>(t)];
    const auto& P = l3[static_cast<std::size_t>(t)].backward;
    for (long k = 0; k <= seg.length(); ++k)
      S[static_cast<std::size_t>(seg.m + k)] = P[static_cast<std::size_t>(k)];
  }
  for (long j = t - 1; j >= 0; --j) {
    const auto& seg = itinerary.segments[static_cast<std::size_t>(j)];
    const auto& P = l3[static_cast<std::size_t>(j)].backward;
    const Interval& dstar_set = P[static_cast<std::size_t>(seg.length())];
    const Interval target = S[static_cast<std::size_t>(seg.n) + 2];
    const Interval X = map.image(dstar_set);
    S[static_cast<std::size_t>(seg.n) + 1] = pull_back(map, target, X, nullptr);
    S[static_cast<std::size_t>(seg.n)] =
        pull_back(map, S[static_cast<std::size_t>(seg.n) + 1], dstar_set, nullptr);
    for (long k = seg.length() - 1; k >= 0; --k)
      S[static_cast<std::size_t>(seg.m + k)] =
          pull_back(map, S[static_cast<std::size_t>(seg.m + k) + 1],
                    P[static_cast<std::size_t>(k)], nullptr);
  }
  // Forward cleanup makes each survivor exactly reachable from its parent.
  for (long k = 0; k < T; ++k) {
    auto cut = S[static_cast<std::size_t>(k) + 1].intersect(map.image(S[static_cast<std::size_t>(k)]));
    if (!cut) throw std::logic_error("survivor chain broke during forward cleanup");
    S[static_cast<std::size_t>(k) + 1] = *cut;
  }

  res.z = S[0].midpoint();
  auto orbit = map.iterate(res.z, T);
  const Rational interior_bound = (c.L1 + 2 * c.K) * d;
  const Rational global_bound = c.LL * d;
  std::vector<bool> interior(static_cast<std::size_t>(T) + 1, false);
  for (const auto& seg : itinerary.segments)
    for (long k = seg.m; k <= seg.n; ++k) interior[static_cast<std::size_t>(k)] = true;
  for (long k = 0; k <= T; ++k) {
    Rational err = rat_abs(orbit[static_cast<std::size_t>(k)] - traj.points[static_cast<std::size_t>(k)]);
    const Rational& allowed = interior[static_cast<std::size_t>(k)] ? interior_bound : global_bound;
    if (err > allowed)
      throw std::logic_error("constructed orbit violates the claimed bound at step " +
                             std::to_string(k) + "; atlas inconsistent with the map");
    res.per_step_errors.push_back(std::move(err));
  }
  res.bound_claimed = global_bound;
  res.certificate.survivors = std::move(S);
  res.certificate.branch = "multi-segment";
  return res;
}

bool replay_certificate(const PiecewiseAffineMap1D& map, const ShadowResult& result,
                        std::string* why) {
  const auto& S = result.certificate.survivors;
  if (S.empty()) {
    if (why) *why = "certificate carries no survivor chain";
    return false;
  }
  if (!S.front().contains(result.z)) {
    if (why) *why = "z outside the stage-0 interval";
    return false;
  }
  Rational x = result.z;
  for (std::size_t k = 0; k + 1 < S.size(); ++k) {
    if (!map.image(S[k]).contains(S[k + 1])) {
      if (why) *why = "stage " + std::to_string(k + 1) + " not inside the image of stage " +
                      std::to_string(k);
      return false;
    }
    x = map.eval(x);
    if (!S[k + 1].contains(x)) {
      if (why) *why = "orbit of z leaves stage " + std::to_string(k + 1);
      return false;
    }
  }
  return true;
}

ShadowResult shadow_via_conjugacy(const Rational& M, const Rational& m_shift,
                                  const Pseudotrajectory& traj, const Rational& inner_d0,
                                  const Shadower& shadower) {
  if (M <= 0) throw std::invalid_argument("conjugacy scale M must be positive");
  const Rational d = traj.defect;
  if (M * d > inner_d0)
    throw PreconditionViolated("defect " + rational_str(d) + " exceeds M^-1 d0 = " +
                               rational_str(Rational(inner_d0 / M)));
  Pseudotrajectory inner;
  inner.points.reserve(traj.points.size());
  for (const auto& y : traj.points) inner.points.push_back(M * (y - m_shift));
  inner.defect = M * d;

  ShadowResult in = shadower(inner);

  ShadowResult out;
  out.z = in.z / M + m_shift;
  out.per_step_errors.reserve(in.per_step_errors.size());
  for (const auto& e : in.per_step_errors) out.per_step_errors.push_back(e / M);
  out.bound_claimed = in.bound_claimed / M;
  out.certificate.itinerary = in.certificate.itinerary;
  out.certificate.y_points.reserve(in.certificate.y_points.size());
  for (const auto& y : in.certificate.y_points)
    out.certificate.y_points.push_back(y / M + m_shift);
  out.certificate.survivors.reserve(in.certificate.survivors.size());
  for (const auto& s : in.certificate.survivors)
    out.certificate.survivors.push_back(Interval(s.lo / M + m_shift, s.hi / M + m_shift));
  out.certificate.branch = in.certificate.branch + " (conjugated)";
  return out;
}

}  // namespace lipshadow
