#include <doctest.h>

#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/oracle.hpp"
#include "lipshadow/shadow.hpp"

using namespace lipshadow;

namespace {
Rational rr(const char* s) { return parse_rational(s); }
}

TEST_CASE("measure_defect") {
  const ExampleF0 ex = build_f0();
  auto orbit = ex.map.iterate(rr("1/100"), 20);
  CHECK(measure_defect(ex.map, orbit).defect == 0);

  // Uniformly shifted orbit: per-step error is |delta - slope*delta|; the
  // maximum over the orbit is recomputed here independently.
  const Rational delta = pow2(-16);
  std::vector<Rational> shifted;
  for (const auto& x : orbit) shifted.push_back(x + delta);
  Pseudotrajectory traj = measure_defect(ex.map, shifted);
  Rational expect = 0;
  for (std::size_t k = 0; k + 1 < shifted.size(); ++k)
    expect = std::max(expect, rat_abs(shifted[k + 1] - ex.map.eval(shifted[k])));
  CHECK(traj.defect == expect);
  CHECK(traj.defect <= 3 * delta);

  // One bad step from the fixed point 0.
  const Rational d = pow2(-12);
  CHECK(measure_defect(ex.map, {Rational(0), d}).defect == d);

  CHECK_THROWS_AS(measure_defect(ex.map, {Rational(5)}), OutOfDomainError);
}

TEST_CASE("lemma 1 constructive shadowing") {
  const ExampleF0 ex = build_f0();
  const ShadowingConstants& c = ex.constants;
  const Rational d = pow2(-12);

  // Exact orbit: y = x_0 with zero errors.
  auto orbit = ex.map.iterate(rr("1/64"), 4);
  auto res = block_shadow(ex.map, ex.G0(), orbit, 0, c);
  CHECK(res.y == rr("1/64"));
  CHECK(res.max_error() == 0);

  // Expanding block, one-term backward sum: y = d/2 shadows [0, d].
  std::vector<Rational> seg{Rational(0), d};
  auto r2 = block_shadow(ex.map, ex.G0(), seg, d, c);
  CHECK(r2.y == d / 2);
  CHECK(r2.errors == std::vector<Rational>{d / 2, Rational(0)});
  CHECK(r2.max_error() <= 2 * d);

  // Contracting block with an injected midpoint error: the forward stable
  // recursion reproduces errors within L1 d.
  std::vector<Rational> wobble{Rational(1), 1 + d / 2, Rational(1)};
  Pseudotrajectory wt = measure_defect(ex.map, wobble);
  auto r3 = block_shadow(ex.map, ex.G1(), wobble, wt.defect, c);
  CHECK(r3.y == 1);
  CHECK(r3.max_error() <= 2 * wt.defect);

  // Precondition lists the offending indices.
  try {
    std::vector<Rational> outside{rr("1/2"), Rational(1)};
    block_shadow(ex.map, ex.G0(), outside, d, c);
    CHECK(false);
  } catch (const PreconditionViolated& e) {
    REQUIRE(!e.items.empty());
    CHECK(e.items[0] == "0");
  }

  // Random in-block workloads, both block kinds, exact bound.
  for (int i = 0; i < 200; ++i) {
    const std::string block = i % 2 ? "G1" : "G0";
    GenOutput gen = gen_inblock(ex, block, 4 + i % 60, d, 500 + i);
    auto rb = block_shadow(ex.map, ex.atlas.at(block), gen.traj.points, gen.traj.defect, c);
    CHECK(rb.max_error() <= c.L1 * gen.traj.defect);
  }
}

TEST_CASE("lemma 3 disk refinement") {
  const ExampleF0 ex = build_f0();
  const ShadowingConstants& c = ex.constants;
  const Rational d = pow2(-14);
  const Rational Kd = c.K * d;

  // Expanding block around the fixed point 0, m = 5 = mu.
  Disk1D disk{"G0", 0, d, Kd, 0};
  DiskRefinement res = refine_disk(ex.map, ex.G0(), c, disk, 0, 5, d);
  CHECK(res.d_star.anchor == 0);
  CHECK(res.d_star.d1 == Kd);
  CHECK(res.backward.back() == Interval(-Kd, Kd));
  // The surviving subset is the exact 5-fold preimage of the final disk.
  CHECK(res.d_prime == Interval(-Kd / 32, Kd / 32));
  CHECK(res.d_prime.contains(0));
  // Forward images clip at radius K d.
  for (const auto& J : res.forward) CHECK(J.length() <= 2 * Kd);

  // m = 0 violates lambda^m K < 1.
  try {
    refine_disk(ex.map, ex.G0(), c, disk, 0, 0, d);
    CHECK(false);
  } catch (const PreconditionViolated& e) {
    bool has11 = false;
    for (const auto& it : e.items) has11 |= it == "(11)";
    CHECK(has11);
  }

  // Stable block: a singleton contracts below d.
  Disk1D sdisk{"G1", 1, d, Kd, d};
  DiskRefinement sres = refine_disk(ex.map, ex.G1(), c, sdisk, 1, 5, d);
  CHECK(rat_abs(sres.d_star.offset) == d / 32);
  CHECK(rat_abs(sres.d_star.offset) <= d);
  CHECK(sres.d_prime == Interval::point(1 + d));
}

TEST_CASE("find_itinerary") {
  const ExampleF0 ex = build_f0();
  const Rational d = pow2(-12);

  // Case-1 style trajectory: one expanding-block segment.
  GenOutput g0 = gen_inblock(ex, "G0", 40, d, 7);
  BlockItinerary single = find_itinerary(g0.traj, ex.atlas, ex.constants);
  CHECK(single.t() == 0);
  CHECK(single.segments[0].block_id == "G0");
  CHECK(single.segments[0].m == 0);
  CHECK(single.segments[0].n == g0.traj.T());

  // Crossing: two segments separated by a 2-step gap, labels distinct.
  GenOutput cr = gen_crossing(ex, d, 20, 20, 9);
  BlockItinerary two = find_itinerary(cr.traj, ex.atlas, ex.constants);
  REQUIRE(two.t() == 1);
  CHECK(two.segments[0].block_id == "G0");
  CHECK(two.segments[1].block_id == "G1");
  CHECK(two.segments[1].m == two.segments[0].n + 2);
  CHECK(two.segments[1].n == cr.traj.T());
  for (const auto& seg : two.segments) CHECK(seg.length() >= ex.constants.mu);

  // A run shorter than mu is rejected.
  Pseudotrajectory tiny = measure_defect(ex.map, std::vector<Rational>(3, Rational(0)));
  CHECK_THROWS_AS(find_itinerary(tiny, ex.atlas, ex.constants), NoItinerary);

  // Uncovered index reported.
  Pseudotrajectory off = measure_defect(
      ex.map, std::vector<Rational>{0, 0, 0, 0, 0, 0, rr("9/8"), rr("9/8")});
  // Defect is huge, above d0.
  CHECK_THROWS_AS(find_itinerary(off, ex.atlas, ex.constants), PreconditionViolated);
}

TEST_CASE("theorem 1 gluing") {
  const ExampleF0 ex = build_f0();
  const ShadowingConstants& c = ex.constants;

  // Exact orbit with its trivial itinerary.
  auto pts = ex.map.iterate(pow2(-10), 8);
  Pseudotrajectory exact = measure_defect(ex.map, pts);
  BlockItinerary it0 = find_itinerary(exact, ex.atlas, c);
  ShadowResult r0 = itinerary_shadow(ex.map, ex.atlas, c, exact, it0);
  CHECK(r0.z == pow2(-10));
  CHECK(r0.max_error() == 0);

  // Single-segment runs coincide with the in-block bound L1 d = 2d.
  const Rational d = pow2(-12);
  GenOutput blk = gen_inblock(ex, "G0", 30, d, 21);
  BlockItinerary it1 = find_itinerary(blk.traj, ex.atlas, c);
  ShadowResult r1 = itinerary_shadow(ex.map, ex.atlas, c, blk.traj, it1);
  CHECK(r1.bound_claimed == c.L1 * blk.traj.defect);
  auto l1 = block_shadow(ex.map, ex.G0(), blk.traj.points, blk.traj.defect, c);
  CHECK(r1.z == l1.y);

  // Crossing trajectory: full pipeline with certificate replay and oracle
  // domination.
  GenOutput cr = gen_crossing(ex, d, 25, 25, 33);
  BlockItinerary it2 = find_itinerary(cr.traj, ex.atlas, c);
  ShadowResult r2 = itinerary_shadow(ex.map, ex.atlas, c, cr.traj, it2);
  const Rational dm = cr.traj.defect;
  CHECK(r2.max_error() <= c.LL * dm);
  for (const auto& seg : it2.segments)
    for (long k = seg.m; k <= seg.n; ++k)
      CHECK(r2.per_step_errors[static_cast<std::size_t>(k)] <= (c.L1 + 2 * c.K) * dm);
  std::string why;
  CHECK(replay_certificate(ex.map, r2, &why));
  // Survivor chain is nested under the forward map (certificate soundness).
  for (std::size_t k = 0; k + 1 < r2.certificate.survivors.size(); ++k)
    CHECK(ex.map.image(r2.certificate.survivors[k]).contains(r2.certificate.survivors[k + 1]));

  OracleResult orc = optimal_shadow_distance(
      ex.map, cr.traj, *default_search(cr.traj, c).intersect(ex.map.domain()));
  CHECK(orc.rho_star <= r2.max_error());

  // Weaker constants (K = 4) still certify transitions pointwise on this
  // geometry: the slope-weighted displacement never reaches the worst case
  // the universal check guards against. The bound tightens to 21d.
  ShadowingConstants weak = derive_constants(rr("1/2"), 2, 4, c.d0);
  CHECK(weak.LL == 21);
  BlockItinerary it3 = find_itinerary(cr.traj, ex.atlas, weak);
  ShadowResult r4 = itinerary_shadow(ex.map, ex.atlas, weak, cr.traj, it3);
  CHECK(r4.bound_claimed == weak.LL * dm);
  CHECK(r4.max_error() <= weak.LL * dm);

  // Malformed itineraries are rejected with the offending clauses.
  BlockItinerary bad = it2;
  bad.segments[1].m += 1;
  CHECK_THROWS_AS(itinerary_shadow(ex.map, ex.atlas, c, cr.traj, bad), PreconditionViolated);
}

TEST_CASE("conjugate_map") {
  const ExampleF0 ex = build_f0();
  CHECK(conjugate_map(ex.map, 1, 0) == ex.map);

  // The scale-3 copy of the reference map (N = 1/32).
  auto core = ex.map.restrict(Interval(-1, 1));
  auto copy = conjugate_map(core, 32, rr("3/32"));
  CHECK(copy.domain() == Interval(rr("1/16"), rr("1/8")));
  CHECK(copy.eval(rr("1/8")) == rr("1/8"));    // fixed point 1 maps to 1/8
  CHECK(copy.eval(rr("3/32")) == rr("3/32"));  // center fixed point
  ScaledFamily fam;
  for (int i = 0; i <= 16; ++i) {
    const Rational x = rr("1/16") + Rational(i) / 16 * rr("1/16");
    CHECK(copy.eval(x) == fam.eval(x));
  }

  // Round-trip is piece-for-piece exact.
  auto back = conjugate_map(copy, rr("1/32"), rr("-3"));
  CHECK(back == core);

  // Negative M flips the domain but preserves values through the conjugacy.
  auto neg = conjugate_map(core, -1, 0);
  CHECK(neg.domain() == Interval(-1, 1));
  CHECK(neg.eval(rr("1/4")) == -core.eval(rr("-1/4")));
}

TEST_CASE("shadow_via_conjugacy") {
  const ExampleF0 ex = build_f0();
  const Rational d = pow2(-20);

  // M = 1, m = 0 reproduces the direct run.
  GenOutput cr = gen_crossing(ex, d, 10, 10, 77);
  ShadowResult direct = trichotomy_shadow(ex, cr.traj);
  ShadowResult via = shadow_via_conjugacy(
      1, 0, cr.traj, d_work(), [&](const Pseudotrajectory& t) { return trichotomy_shadow(ex, t); });
  CHECK(via.z == direct.z);
  CHECK(via.per_step_errors == direct.per_step_errors);

  // Scale-3 segment: errors map back exactly as M^-1 times the inner ones.
  const Rational N = ScaledFamily::scale_width(3);
  std::vector<Rational> outer_pts;
  for (const auto& u : cr.traj.points) outer_pts.push_back(N * u + 3 * N);
  auto gprime = conjugate_map(ex.map, Rational(1) / N, 3 * N);
  Pseudotrajectory outer = measure_defect(gprime, outer_pts);
  CHECK(outer.defect == N * cr.traj.defect);
  ShadowResult res = shadow_via_conjugacy(
      Rational(1) / N, 3 * N, outer, d_work(),
      [&](const Pseudotrajectory& t) { return trichotomy_shadow(ex, t); });
  CHECK(res.max_error() <= 109 * outer.defect);
  for (std::size_t k = 0; k < res.per_step_errors.size(); ++k)
    CHECK(res.per_step_errors[k] == N * direct.per_step_errors[k]);

  // Threshold boundary: defect exactly M^-1 d0 passes, above does not.
  const Rational M(32);
  Pseudotrajectory at_limit;
  at_limit.points = {rr("3/32"), rr("3/32")};
  at_limit.defect = d_work() / M;
  CHECK_NOTHROW(shadow_via_conjugacy(M, 0, at_limit, d_work(),
                                     [&](const Pseudotrajectory& t) {
                                       ShadowResult r;
                                       r.z = t.points[0];
                                       r.per_step_errors.assign(t.points.size(), 0);
                                       r.bound_claimed = 0;
                                       return r;
                                     }));
  at_limit.defect = d_work() / M + pow2(-40);
  CHECK_THROWS_AS(shadow_via_conjugacy(M, 0, at_limit, d_work(),
                                       [&](const Pseudotrajectory& t) {
                                         ShadowResult r;
                                         r.z = t.points[0];
                                         r.per_step_errors.assign(t.points.size(), 0);
                                         r.bound_claimed = 0;
                                         return r;
                                       }),
                  PreconditionViolated);
}
