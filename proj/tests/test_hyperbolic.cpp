#include <doctest.h>

#include <random>

#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"
#include "lipshadow/hyperbolic.hpp"

using namespace lipshadow;

namespace {
Rational rr(const char* s) { return parse_rational(s); }
}

TEST_CASE("neighborhood and h_set") {
  CHECK(neighborhood(rr("1/3"), 0) == Interval::point(rr("1/3")));
  CHECK(neighborhood(0, rr("1/8")) == Interval(rr("-1/8"), rr("1/8")));
  CHECK_THROWS(neighborhood(0, -1));

  BoxND sq = neighborhood_nd(Eigen::Vector2d(0, 0), 1.0);
  CHECK(sq.lo[0] == -1.0);
  CHECK(sq.hi[1] == 1.0);

  const Rational d = pow2(-12);
  const Rational K1d = 28 * d;
  auto h = h_set(Interval(rr("-1/3"), rr("1/3")), K1d);
  REQUIRE(h.has_value());
  CHECK(*h == Interval(rr("-1/3") + K1d, rr("1/3") - K1d));

  CHECK(*h_set(Interval(0, 1), 0) == Interval(0, 1));
  CHECK(!h_set(Interval(0, 1), rr("3/4")).has_value());

  // Anti-monotone in the shrink radius.
  std::mt19937_64 eng(3);
  for (int i = 0; i < 50; ++i) {
    Rational d1 = Rational(static_cast<long>(eng() % 100)) / 400;
    Rational d2 = Rational(static_cast<long>(eng() % 100)) / 400;
    if (d1 > d2) std::swap(d1, d2);
    auto big = h_set(Interval(0, 1), d1);
    auto small_set = h_set(Interval(0, 1), d2);
    if (small_set) {
      REQUIRE(big.has_value());
      CHECK(big->contains(*small_set));
    }
  }
}

TEST_CASE("condition 1 verification") {
  const ExampleF0 ex = build_f0();
  CertificateReport rep = verify_block_form(ex.atlas, ex.map);
  CHECK(rep.pass);
  REQUIRE(rep.blocks.size() == 2);
  CHECK(rep.blocks[0].norm_detail == "|B^-1| = 1/2");
  CHECK(rep.blocks[1].norm_detail == "|A| = 1/2");
  CHECK(rep.blocks[0].affine_ok);
  CHECK(rep.blocks[1].affine_ok);

  // Identity map fails the expansion bound.
  auto id = PiecewiseAffineMap1D::identity(Interval(0, 1));
  HyperbolicAtlas1D flat_atlas{{Block1D{"B", Interval(0, 1), BlockKind::Unstable, 1}},
                               rr("1/2")};
  CertificateReport bad = verify_block_form(flat_atlas, id);
  CHECK(!bad.pass);
  CHECK(bad.blocks[0].norm_detail == "|B^-1| = 1");

  // Slope 3/2 declared as B under lambda = 1/2: reported norm is 2/3.
  auto mild = PiecewiseAffineMap1D::affine(Interval(0, 1), rr("3/2"), 0);
  HyperbolicAtlas1D mild_atlas{{Block1D{"B", Interval(0, 1), BlockKind::Unstable, rr("3/2")}},
                               rr("1/2")};
  CertificateReport mild_rep = verify_block_form(mild_atlas, mild);
  CHECK(!mild_rep.pass);
  CHECK(mild_rep.blocks[0].norm_detail == "|B^-1| = 2/3");

  // A piece with the wrong slope overlapping the block is reported.
  HyperbolicAtlas1D wrong{{Block1D{"G0", Interval(rr("-1/3"), rr("1/3")), BlockKind::Unstable,
                                   rr("3")}},
                          rr("1/2")};
  CertificateReport w = verify_block_form(wrong, ex.map);
  CHECK(!w.blocks[0].affine_ok);
}

TEST_CASE("derive_constants") {
  ShadowingConstants c = derive_constants(rr("1/2"), 2, 26, pow2(-10));
  CHECK(c.L1 == 2);
  CHECK(c.L2 == 5);
  CHECK(c.K1 == 28);
  CHECK(c.LL == 109);
  CHECK(c.mu == 5);

  ShadowingConstants c2 = derive_constants(rr("1/2"), 1, 2, 1);
  CHECK(c2.L1 == 2);
  CHECK(c2.L2 == 4);
  CHECK(c2.K1 == 4);
  CHECK(c2.LL == 7);
  CHECK(c2.mu == 2);

  CHECK_THROWS_AS(derive_constants(rr("1/2"), 2, 2, 1), InvalidConstants);  // K = L0
  CHECK_THROWS_AS(derive_constants(1, 2, 26, 1), InvalidConstants);
  CHECK_THROWS_AS(derive_constants(rr("1/2"), 2, 26, 0), InvalidConstants);

  // LL strictly increases in K and L0; mu weakly decreases as lambda does.
  Rational prev_ll = 0;
  for (long K = 3; K <= 30; ++K) {
    auto ck = derive_constants(rr("1/2"), 2, K, 1);
    CHECK(ck.LL > prev_ll);
    prev_ll = ck.LL;
  }
  prev_ll = 0;
  for (long L0 = 1; L0 <= 10; ++L0) {
    auto cl = derive_constants(rr("1/2"), L0, 26, 1);
    CHECK(cl.LL > prev_ll);
    prev_ll = cl.LL;
  }
  long prev_mu = 1000;
  for (long q = 9; q >= 1; --q) {  // lambda = q/10 decreasing
    auto cm = derive_constants(Rational(q) / 10, 2, 26, 1);
    CHECK(cm.mu <= prev_mu);
    prev_mu = cm.mu;
  }
}

TEST_CASE("map_disk") {
  const ExampleF0 ex = build_f0();
  const Rational d = pow2(-12);
  const Rational Kd = 26 * d;

  // Expanding block: radii rescale by 1/lambda.
  Disk1D disk{"G0", 0, Kd, d, 0};
  Disk1D image = map_disk(ex.G0(), ex.atlas.lambda, disk, ex.map.eval(0));
  CHECK(image.d1 == 2 * Kd);
  CHECK(image.d2 == d / 2);
  CHECK(image.realize(ex.G0()) == Interval(-2 * Kd, 2 * Kd));

  // Contracting block: the singleton offset halves.
  Disk1D stable_disk{"G1", 1, d, Kd, rr("1/4096")};
  Disk1D stable_image = map_disk(ex.G1(), ex.atlas.lambda, stable_disk, ex.map.eval(1));
  CHECK(stable_image.offset == rr("1/8192"));
  CHECK(stable_image.d2 == Kd / 2);

  // Anchor outside H_l(max radius) is rejected.
  Disk1D bad{"G0", rr("1/3"), Kd, d, 0};
  CHECK_THROWS_AS(map_disk(ex.G0(), ex.atlas.lambda, bad, rr("2/3")), PreconditionViolated);

  // 1D containment: sampled points of the image disk pull back into the
  // source disk through the block action, exactly.
  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Rational p = Rational(static_cast<long>(eng() % 200) - 100) / 1000;  // in H0
    Disk1D dsk{"G0", p, Kd, d, 0};
    const Rational fp = ex.map.eval(p);
    if (!ex.G0().region.contains(fp)) continue;
    Disk1D img = map_disk(ex.G0(), ex.atlas.lambda, dsk, fp);
    for (int s = 0; s <= 50; ++s) {
      const Rational t = img.anchor - img.d1 + 2 * img.d1 * Rational(s) / 50;
      const Rational w = p + (t - fp) / ex.G0().rate;  // block-action preimage
      CHECK(dsk.realize(ex.G0()).contains(w));
      CHECK(ex.map.eval(w) == t);
    }
  }
}

TEST_CASE("map_disk in two dimensions") {
  BlockND block;
  block.id = "H";
  block.region = BoxND{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
  block.splitting = SplittingND{{0}, {1}};
  block.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
  block.B = Eigen::MatrixXd::Constant(1, 1, 2.0);

  DiskND flat;
  flat.block_id = "H";
  flat.anchor = Eigen::Vector2d(0, 0);
  flat.d1 = 0.1;
  flat.d2 = 0.1;
  flat.C = Eigen::MatrixXd::Zero(1, 1);
  flat.c = Eigen::VectorXd::Zero(1);

  DiskND out = map_disk_nd(block, 0.5, flat, Eigen::Vector2d(0, 0));
  CHECK(out.d1 == doctest::Approx(0.2));
  CHECK(out.d2 == doctest::Approx(0.05));
  CHECK(out.C.norm() == 0.0);

  // Graph transform with a tilted graph: C* = A C B^-1, and 50 sampled image
  // points pull back into the source disk.
  DiskND tilted = flat;
  tilted.C = Eigen::MatrixXd::Constant(1, 1, 0.3);
  tilted.c = Eigen::VectorXd::Constant(1, 0.02);
  DiskND timg = map_disk_nd(block, 0.5, tilted, Eigen::Vector2d(0, 0));
  CHECK(timg.C(0, 0) == doctest::Approx(0.5 * 0.3 / 2.0));
  CHECK(timg.c[0] == doctest::Approx(0.01));
  for (int s = 0; s <= 50; ++s) {
    const double etap = -timg.d1 + 2 * timg.d1 * s / 50.0;
    const double xi_img = timg.C(0, 0) * etap + timg.c[0];
    // Pull back: eta = B^-1 eta', xi = C eta + c; the block action must send
    // (xi, eta) to (xi_img, etap).
    const double eta = etap / 2.0;
    const double xi = tilted.C(0, 0) * eta + tilted.c[0];
    CHECK(std::abs(0.5 * xi - xi_img) <= 1e-15);
    CHECK(std::abs(eta) <= tilted.d1 + 1e-15);
    CHECK(std::abs(xi) <= tilted.d2 + 1e-15);
  }
}

TEST_CASE("condition 2 verifier") {
  const ExampleF0 ex = build_f0();
  const ShadowingConstants& c = ex.constants;
  const Rational d = pow2(-12);

  // Worst-case admissible configuration with K = 26: still covered.
  const Rational p = rr("5/24");
  const Rational q = p - 2 * d;
  const Rational f2p = ex.map.eval(ex.map.eval(p));
  const Rational r = f2p + 5 * d;
  Disk1D disk{"G0", q, c.K * d, d, 0};
  TransitionCheck res = check_transition(ex.map, ex.atlas, c, p, q, r, disk, d);
  CHECK(res.ok);
  CHECK(res.witness.block_id == "G1");
  CHECK(rat_abs(res.witness.offset) <= d);

  // Same geometry at the other end of the crossing band.
  const Rational p2 = rr("1/8");
  const Rational q2 = p2 + 2 * d;
  const Rational r2 = ex.map.eval(ex.map.eval(p2)) - 5 * d;
  Disk1D disk2{"G0", q2, c.K * d, d, 0};
  CHECK(check_transition(ex.map, ex.atlas, c, p2, q2, r2, disk2, d).ok);

  // K = 4 cannot reach the worst-case r at distance 5d.
  ShadowingConstants c4 = derive_constants(rr("1/2"), 2, 4, c.d0);
  Disk1D disk4{"G0", q, c4.K * d, d, 0};
  TransitionCheck res4 = check_transition(ex.map, ex.atlas, c4, p, q, r, disk4, d);
  CHECK(!res4.ok);

  // l = m: f^2(p) stays in the source block.
  const Rational tiny = pow2(-20);
  Disk1D disk_lm{"G0", tiny, c.K * d, d, 0};
  CHECK_THROWS_AS(
      check_transition(ex.map, ex.atlas, c, tiny, tiny, tiny, disk_lm, d),
      PreconditionViolated);
  try {
    check_transition(ex.map, ex.atlas, c, tiny, tiny, tiny, disk_lm, d);
  } catch (const PreconditionViolated& e) {
    bool has21 = false;
    for (const auto& item : e.items) has21 |= item == "(2.1)";
    CHECK(has21);
  }
}

TEST_CASE("condition 2 universal margins") {
  const ExampleF0 ex = build_f0();
  for (int k = 0; k < 4; ++k) {
    const Rational d = ex.constants.d0 / pow2(k);
    auto checks = verify_transitions_universal(ex.map, ex.atlas, ex.constants, d);
    REQUIRE(checks.size() == 2);
    for (const auto& pc : checks) {
      CHECK(pc.pass);
      if (pc.from == "G0") {
        CHECK(pc.feasible);
        CHECK(pc.min_margin >= 0);
      } else {
        CHECK(!pc.feasible);  // G1 -> G0 transitions are dynamically impossible
      }
    }
  }

  // With K = 4 the transition margin goes negative.
  ShadowingConstants c4 = derive_constants(rr("1/2"), 2, 4, ex.constants.d0);
  auto weak = verify_transitions_universal(ex.map, ex.atlas, c4, pow2(-12));
  bool found_failure = false;
  for (const auto& pc : weak)
    if (pc.from == "G0") {
      CHECK(pc.feasible);
      CHECK(!pc.pass);
      CHECK(pc.min_margin < 0);
      found_failure = true;
    }
  CHECK(found_failure);
}

TEST_CASE("degenerate disk conventions") {
  const ExampleF0 ex = build_f0();
  const Rational d = pow2(-12);
  // Unstable realization is the full interval; stable is a single point
  // within min(d1, d2) of the anchor.
  Disk1D u{"G0", 0, d, 26 * d, 0};
  CHECK(u.realize(ex.G0()) == Interval(-d, d));
  CHECK(u.in_class(ex.G0(), d, 26 * d));
  Disk1D s{"G1", 1, d, 26 * d, d};
  CHECK(s.realize(ex.G1()) == Interval::point(1 + d));
  CHECK(s.in_class(ex.G1(), d, 26 * d));
  Disk1D s_bad{"G1", 1, d, 26 * d, 2 * d};  // offset above min(d1, d2)
  CHECK(!s_bad.in_class(ex.G1(), d, 26 * d));
}

TEST_CASE("condition 1 in two dimensions") {
  AtlasND atlas;
  atlas.lambda = 0.5;
  BlockND block;
  block.id = "H";
  block.region = BoxND{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
  block.splitting = SplittingND{{0}, {1}};
  block.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
  block.B = Eigen::MatrixXd::Constant(1, 1, 2.0);
  atlas.blocks.push_back(block);

  Eigen::MatrixXd M(2, 2);
  M << 0.5, 0, 0, 2;
  PiecewiseAffineMapND map(
      2, {AffineCellND{block.region, M, Eigen::Vector2d(0, 0)}});
  auto checks = verify_block_form_nd(atlas, map);
  REQUIRE(checks.size() == 1);
  CHECK(checks[0].ok());

  // Off-diagonal coupling breaks the block form.
  Eigen::MatrixXd bad = M;
  bad(0, 1) = 0.25;
  PiecewiseAffineMapND bad_map(
      2, {AffineCellND{block.region, bad, Eigen::Vector2d(0, 0)}});
  auto bad_checks = verify_block_form_nd(atlas, bad_map);
  CHECK(!bad_checks[0].affine_ok);
}
