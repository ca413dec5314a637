#include "lipshadow/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/oracle.hpp"
#include "lipshadow/parallel.hpp"
#include "lipshadow/rational.hpp"

namespace lipshadow {

namespace {

using Clock = std::chrono::steady_clock;

struct TrialRecord {
  Pseudotrajectory traj;
  Rational constructive_max;
  bool scaled = false;  // trajectory of the scaled family rather than f0
};

struct Context {
  AcceptanceOptions options;
  ExampleF0 ex = build_f0();
  ScaledFamily family;
  std::vector<TrialRecord> records;
  std::mutex record_mutex;

  void record(Pseudotrajectory traj, Rational maxerr, bool scaled) {
    std::lock_guard<std::mutex> lock(record_mutex);
    records.push_back(TrialRecord{std::move(traj), std::move(maxerr), scaled});
  }
};

struct ItemCheck {
  AcceptanceItem* item;
  void expect(bool ok, const std::string& what) {
    ++item->checks;
    if (!ok && item->failure.empty()) item->failure = what;
  }
  void detail(const std::string& name, bool ok, const std::string& note = "") {
    item->details.push_back(AcceptanceDetail{name, ok, note});
    expect(ok, name + (note.empty() ? "" : " (" + note + ")"));
  }
};

Rational random_d(LatticeRng& rng, long emin_exp, long emax_exp) {
  // 2^-e scaled by a lattice factor in [1/2, 1]; stays within [2^-emax, 2^-emin].
  const long e = rng.uniform_int(emin_exp, emax_exp);
  const Rational scale = Rational(rng.uniform_int(512, 1024)) / 1024;
  Rational d = pow2(-e) * scale;
  if (d < pow2(-emax_exp)) d = pow2(-emax_exp);
  return d;
}

// ---------------------------------------------------------------------------
// Item 1: exact identities
// ---------------------------------------------------------------------------
void item1(Context& ctx, ItemCheck& ck) {
  const auto& f0 = ctx.ex.map;
  const bool corrupt = ctx.options.corrupt == "f0";
  auto eq = [&](const Rational& got, const Rational& want) {
    return corrupt ? got == want + pow2(-30) : got == want;
  };

  ck.detail("f0(-7/6) = -13/12", eq(f0.eval(Rational(-7, 6)), Rational(-13, 12)));
  ck.detail("f0(4/3) = 7/6", eq(f0.eval(Rational(4, 3)), Rational(7, 6)));
  ck.detail("f0(5/12) = 17/24", eq(f0.eval(Rational(5, 12)), Rational(17, 24)));

  bool fixed_ok = true;
  for (long n = 0; n <= 20; ++n) {
    const Rational x = pow2(-n);
    fixed_ok = fixed_ok && eq(ctx.family.eval(x), x) && eq(ctx.family.eval(-x), -x);
  }
  ck.detail("f(+-2^-n) = +-2^-n for n = 0..20", fixed_ok);

  bool ladder_ok = true, inclusion_ok = true;
  for (long n = 1; n <= 20; ++n) {
    const auto seg = segment(ctx.family, n);
    ladder_ok = ladder_ok && eq(seg.f_alpha, 23 * seg.N / 12) && eq(seg.f_beta, 25 * seg.N / 6);
    inclusion_ok = inclusion_ok && seg.image_inside;
  }
  ck.detail("f(alpha_n) = 23 N_n/12 and f(beta_n) = 25 N_n/6 for n = 1..20", ladder_ok);
  ck.detail("f(I_n) inside N(N_n/12, I_n) for n = 1..20", inclusion_ok);
}

// ---------------------------------------------------------------------------
// Item 2: constants ledger
// ---------------------------------------------------------------------------
void item2(Context& ctx, ItemCheck& ck) {
  const Rational K = ctx.options.corrupt == "K" ? Rational(27) : Rational(26);
  const ShadowingConstants c = derive_constants(Rational(1, 2), 2, K, d_work());
  ck.detail("L1 = 2", c.L1 == 2, rational_str(c.L1));
  ck.detail("L2 = 5", c.L2 == 5, rational_str(c.L2));
  ck.detail("K1 = 28", c.K1 == 28, rational_str(c.K1));
  ck.detail("LL = 109", c.LL == 109, rational_str(c.LL));
  ck.detail("mu = 5", c.mu == 5, std::to_string(c.mu));
}

// ---------------------------------------------------------------------------
// Item 3: Lemma 1 bound over in-block trajectories
// ---------------------------------------------------------------------------
void item3(Context& ctx, ItemCheck& ck, long trials) {
  std::vector<std::string> failures(static_cast<std::size_t>(trials));
  parallel_for(trials, ctx.options.jobs, [&](long i) {
    LatticeRng rng(ctx.options.seed + 1000 + static_cast<std::uint64_t>(i));
    const std::string block_id = i % 2 == 0 ? "G0" : "G1";
    const long T = rng.uniform_int(2, 200);
    const Rational d = random_d(rng, 10, 20);
    GenOutput gen = gen_inblock(ctx.ex, block_id, T, d,
                                ctx.options.seed + 7777 + static_cast<std::uint64_t>(i));
    const Rational dm = gen.traj.defect;
    auto l1 = block_shadow(ctx.ex.map, ctx.ex.atlas.at(block_id), gen.traj.points, dm,
                            ctx.ex.constants);
    if (l1.max_error() > 2 * dm) {
      failures[static_cast<std::size_t>(i)] = "trial " + std::to_string(i) +
                                              ": error above 2d, d = " + rational_str(dm);
      return;
    }
    ctx.record(std::move(gen.traj), l1.max_error(), false);
  });
  long bad = 0;
  std::string first;
  for (auto& f : failures)
    if (!f.empty()) {
      ++bad;
      if (first.empty()) first = f;
    }
  ck.detail("lemma-1 error <= 2d on " + std::to_string(trials) + " in-block trials", bad == 0,
            bad == 0 ? "zero violations" : first);
}

// ---------------------------------------------------------------------------
// Item 4: Theorem 1 / Lemma 4 bound over case-1/2/3 trajectories
// ---------------------------------------------------------------------------
void item4(Context& ctx, ItemCheck& ck, long trials) {
  const ShadowingConstants& c = ctx.ex.constants;
  std::vector<std::string> failures(static_cast<std::size_t>(trials));
  parallel_for(trials, ctx.options.jobs, [&](long i) {
    LatticeRng rng(ctx.options.seed + 2000 + 31 * static_cast<std::uint64_t>(i));
    const Rational d = random_d(rng, 10, 20);
    GenOutput gen;
    const int kind = static_cast<int>(i % 4);
    const bool mirror = (i / 4) % 2 == 1;
    switch (kind) {
      case 0:
        gen = gen_inblock(ctx.ex, "G0", rng.uniform_int(8, 180), d,
                          ctx.options.seed + 811 + static_cast<std::uint64_t>(i));
        break;
      case 1:
        gen = gen_inblock(ctx.ex, "G1", rng.uniform_int(8, 180), d,
                          ctx.options.seed + 812 + static_cast<std::uint64_t>(i));
        break;
      default:
        gen = gen_crossing(ctx.ex, d, rng.uniform_int(c.mu, 60), rng.uniform_int(c.mu, 60),
                           ctx.options.seed + 813 + static_cast<std::uint64_t>(i));
        break;
    }
    if (mirror) {
      gen.traj = gen.traj.mirrored();
      gen.traj = measure_defect(ctx.ex.map, std::move(gen.traj.points));
    }
    const Rational dm = gen.traj.defect;
    ShadowResult res = trichotomy_shadow(ctx.ex, gen.traj);
    std::string why;
    if (res.max_error() > c.LL * dm) {
      failures[static_cast<std::size_t>(i)] = "trial " + std::to_string(i) + ": error above 109d";
      return;
    }
    const Rational interior_bound = (c.L1 + 2 * c.K) * dm;
    for (const auto& seg : res.certificate.itinerary.segments)
      for (long k = seg.m; k <= seg.n; ++k)
        if (res.per_step_errors[static_cast<std::size_t>(k)] > interior_bound) {
          failures[static_cast<std::size_t>(i)] =
              "trial " + std::to_string(i) + ": interior error above 54d at k=" +
              std::to_string(k);
          return;
        }
    if (!replay_certificate(ctx.ex.map, res, &why)) {
      failures[static_cast<std::size_t>(i)] = "trial " + std::to_string(i) +
                                              ": certificate replay failed: " + why;
      return;
    }
    ctx.record(std::move(gen.traj), res.max_error(), false);
  });
  long bad = 0;
  std::string first;
  for (auto& f : failures)
    if (!f.empty()) {
      ++bad;
      if (first.empty()) first = f;
    }
  ck.detail("error <= 109d and interior <= 54d on " + std::to_string(trials) + " trials",
            bad == 0, bad == 0 ? "zero violations" : first);
}

// ---------------------------------------------------------------------------
// Item 5: Theorem 2 pipeline across branches
// ---------------------------------------------------------------------------
void item5(Context& ctx, ItemCheck& ck, long per_scale, long rest_trials) {
  const long scales = 10;
  const long total = per_scale * scales + rest_trials;
  std::vector<std::string> failures(static_cast<std::size_t>(total));
  parallel_for(total, ctx.options.jobs, [&](long i) {
    LatticeRng rng(ctx.options.seed + 3000 + 17 * static_cast<std::uint64_t>(i));
    auto& fail = failures[static_cast<std::size_t>(i)];
    if (i < per_scale * scales) {
      const long n = 1 + i / per_scale;
      const Rational N = ScaledFamily::scale_width(n);
      // Inner f0 trajectory mapped out through the rescaling.
      const Rational dq = random_d(rng, 12, 20);
      GenOutput inner;
      const int kind = static_cast<int>(i % 3);
      if (kind == 0)
        inner = gen_inblock(ctx.ex, "G0", rng.uniform_int(8, 80), dq,
                            ctx.options.seed + 911 + static_cast<std::uint64_t>(i));
      else if (kind == 1)
        inner = gen_inblock(ctx.ex, "G1", rng.uniform_int(8, 80), dq,
                            ctx.options.seed + 912 + static_cast<std::uint64_t>(i));
      else
        inner = gen_crossing(ctx.ex, dq, rng.uniform_int(ctx.ex.constants.mu, 40),
                             rng.uniform_int(ctx.ex.constants.mu, 40),
                             ctx.options.seed + 913 + static_cast<std::uint64_t>(i));
      const bool mirror = (i / 3) % 2 == 1;
      std::vector<Rational> pts;
      pts.reserve(inner.traj.points.size());
      for (const auto& u : inner.traj.points) {
        Rational y = N * u + 3 * N;
        pts.push_back(mirror ? Rational(-y) : y);
      }
      Pseudotrajectory traj = measure_defect(ctx.family.ref(), std::move(pts));
      const Rational dm = traj.defect;
      ShadowResult res = family_shadow(ctx.family, ctx.ex, traj);
      // Ladder segments overlap, so a trajectory near the top of I_n can
      // legitimately resolve at scale n-1.
      const bool branch_ok =
          res.certificate.branch.find("segment n=" + std::to_string(n)) != std::string::npos ||
          (n > 1 && res.certificate.branch.find("segment n=" + std::to_string(n - 1)) !=
                        std::string::npos);
      if (!branch_ok) {
        fail = "trial " + std::to_string(i) + ": unexpected branch " + res.certificate.branch;
        return;
      }
      if (res.max_error() > 109 * dm) {
        fail = "trial " + std::to_string(i) + ": segment-branch error above 109d";
        return;
      }
      ctx.record(std::move(traj), res.max_error(), true);
    } else {
      // Rest-point workload: pseudo-orbits steered to stay within d of 0;
      // each step error keeps |e| >= d/2, so the measured defect stays
      // comparable to the excursion and |x_k| <= 2 * defect <= 44 * defect.
      // d stays below the global threshold d_work / 12.
      const Rational d = random_d(rng, 14, 20);
      const long T = rng.uniform_int(10, 60);
      std::vector<Rational> pts{rng.uniform(Interval(-d, d))};
      for (long k = 0; k < T; ++k) {
        const Rational fx = ctx.family.eval(pts.back());
        Interval window = fx >= 0 ? Interval(std::max(Rational(fx - d), Rational(-d)),
                                             std::min(Rational(fx - d / 2), d))
                                  : Interval(std::max(Rational(fx + d / 2), Rational(-d)),
                                             std::min(Rational(fx + d), d));
        pts.push_back(rng.uniform(window));
      }
      Pseudotrajectory traj = measure_defect(ctx.family.ref(), std::move(pts));
      const Rational dm = traj.defect;
      ShadowResult res = family_shadow(ctx.family, ctx.ex, traj);
      if (res.certificate.branch != "rest_point") {
        fail = "trial " + std::to_string(i) + ": expected rest-point branch, got " +
               res.certificate.branch;
        return;
      }
      if (res.z != 0 || res.max_error() > 44 * dm) {
        fail = "trial " + std::to_string(i) + ": rest-point bound 44d violated";
        return;
      }
      ctx.record(std::move(traj), res.max_error(), true);
    }
  });
  long bad = 0;
  std::string first;
  for (auto& f : failures)
    if (!f.empty()) {
      ++bad;
      if (first.empty()) first = f;
    }
  ck.detail("109d on segment branches (n=1..10), 44d on rest-point, " + std::to_string(total) +
                " trials",
            bad == 0, bad == 0 ? "zero violations" : first);
}

// ---------------------------------------------------------------------------
// Item 6: oracle domination + grid cross-check
// ---------------------------------------------------------------------------

// Dyadic fixed-point value num / 2^scale; __int128 keeps T <= 8 orbits exact.
struct Dyadic {
  __int128 num = 0;
  int scale = 0;
};

Dyadic dyadic_align(const Dyadic& x, int scale) {
  return Dyadic{x.num << (scale - x.scale), scale};
}

Rational dyadic_to_rational(const Dyadic& x) {
  const bool neg = x.num < 0;
  unsigned __int128 mag = neg ? static_cast<unsigned __int128>(-x.num)
                              : static_cast<unsigned __int128>(x.num);
  mpz_class m;
  mpz_import(m.get_mpz_t(), 1, 1, sizeof(mag), 0, 0, &mag);
  if (neg) m = -m;
  Rational r(m);
  return r / pow2(x.scale);
}

// Reference-map step in dyadic arithmetic (breakpoints +-1/3 are not dyadic,
// so strict comparisons are safe).
Dyadic f0_dyadic(const Dyadic& x) {
  const __int128 three = 3 * x.num;
  const __int128 one = static_cast<__int128>(1) << x.scale;
  if (three > one) return Dyadic{x.num + one, x.scale + 1};    // x/2 + 1/2
  if (three < -one) return Dyadic{x.num - one, x.scale + 1};   // x/2 - 1/2
  return Dyadic{2 * x.num, x.scale};
}

bool rational_to_dyadic(const Rational& r, Dyadic* out) {
  mpz_class den = r.get_den();
  const std::size_t bits = mpz_sizeinbase(den.get_mpz_t(), 2);
  if (mpz_popcount(den.get_mpz_t()) != 1 || bits > 80) return false;
  mpz_class num = r.get_num();
  if (mpz_sizeinbase(num.get_mpz_t(), 2) > 100) return false;
  Dyadic d;
  d.scale = static_cast<int>(bits - 1);
  const bool neg = num < 0;
  mpz_class mag = neg ? mpz_class(-num) : num;
  unsigned __int128 acc = 0;
  mpz_export(&acc, nullptr, 1, sizeof(acc), 0, 0, mag.get_mpz_t());
  d.num = neg ? -static_cast<__int128>(acc) : static_cast<__int128>(acc);
  *out = d;
  return true;
}

void item6(Context& ctx, ItemCheck& ck, long grid_instances) {
  // Domination over every stored trial of items 3-5.
  const long n = static_cast<long>(ctx.records.size());
  std::vector<std::string> failures(static_cast<std::size_t>(n));
  parallel_for(n, ctx.options.jobs, [&](long i) {
    const TrialRecord& rec = ctx.records[static_cast<std::size_t>(i)];
    const Interval search = default_search(rec.traj, ctx.ex.constants);
    OracleResult orc;
    if (rec.scaled) {
      orc = optimal_shadow_distance(ctx.family, rec.traj,
                                    *search.intersect(ctx.family.domain()));
    } else {
      orc = optimal_shadow_distance(ctx.ex.map, rec.traj,
                                    *search.intersect(ctx.ex.map.domain()));
    }
    if (orc.rho_star > rec.constructive_max)
      failures[static_cast<std::size_t>(i)] =
          "record " + std::to_string(i) + ": rho* = " + rational_str(orc.rho_star) +
          " above constructive " + rational_str(rec.constructive_max);
  });
  long bad = 0;
  std::string first;
  for (auto& f : failures)
    if (!f.empty()) {
      ++bad;
      if (first.empty()) first = f;
    }
  ck.detail("oracle rho* <= constructive max error on all " + std::to_string(n) + " trials",
            bad == 0, bad == 0 ? "domination holds" : first);

  // Exhaustive-grid cross-check on small instances.
  std::vector<std::string> gridfail(static_cast<std::size_t>(grid_instances));
  parallel_for(grid_instances, ctx.options.jobs, [&](long i) {
    LatticeRng rng(ctx.options.seed + 4000 + 101 * static_cast<std::uint64_t>(i));
    GenSpec spec;
    spec.kind = GenSpec::Kind::Perturbed;
    spec.x0 = rng.uniform(Interval(Rational(1, 4), Rational(9, 8)));
    spec.T = rng.uniform_int(2, 8);
    spec.d_target = pow2(-rng.uniform_int(10, 16));
    spec.seed = ctx.options.seed + 5000 + static_cast<std::uint64_t>(i);
    GenOutput gen = gen_perturbed(map_ref(ctx.ex.map), spec);
    Interval search = default_search(gen.traj, ctx.ex.constants);
    if (gen.traj.defect == 0) search = neighborhood(gen.traj.points[0], spec.d_target);
    auto cut = search.intersect(ctx.ex.map.domain());
    search = *cut;
    OracleResult orc = optimal_shadow_distance(ctx.ex.map, gen.traj, search);

    // 2^20 + 1 dyadic grid points, exact __int128 arithmetic.
    Dyadic lo, width;
    std::vector<Dyadic> xs(gen.traj.points.size());
    bool ok = rational_to_dyadic(search.lo, &lo) &&
              rational_to_dyadic(search.length(), &width);
    for (std::size_t k = 0; ok && k < gen.traj.points.size(); ++k)
      ok = rational_to_dyadic(gen.traj.points[k], &xs[k]);
    if (!ok) {
      gridfail[static_cast<std::size_t>(i)] = "instance " + std::to_string(i) +
                                              ": inputs not dyadic";
      return;
    }
    const int kGridBits = 20;
    int scale = std::max(lo.scale, width.scale + kGridBits);
    for (auto& x : xs) scale = std::max(scale, x.scale);
    lo = dyadic_align(lo, scale);
    // step = width / 2^20 at the common scale; division is exact because
    // scale >= width.scale + kGridBits.
    const Dyadic step{dyadic_align(width, scale).num >> kGridBits, scale};
    std::vector<Dyadic> xa;
    for (auto& x : xs) xa.push_back(dyadic_align(x, scale));
    __int128 best = -1;
    long best_i = -1;
    const long npts = (1 << kGridBits) + 1;
    for (long g = 0; g < npts; ++g) {
      Dyadic z{lo.num + step.num * g, scale};
      __int128 worst = 0;
      Dyadic cur = z;
      for (std::size_t k = 0; k < xa.size(); ++k) {
        if (k > 0) cur = f0_dyadic(cur);
        const Dyadic a = dyadic_align(cur, scale + 10);
        const Dyadic b = dyadic_align(xa[k], scale + 10);
        __int128 diff = a.num - b.num;
        if (diff < 0) diff = -diff;
        if (diff > worst) worst = diff;
      }
      if (best < 0 || worst < best) {
        best = worst;
        best_i = g;
      }
    }
    (void)best_i;
    const Rational grid_min = dyadic_to_rational(Dyadic{best, scale + 10});
    const Rational h = dyadic_to_rational(step);
    const Rational lip = rat_pow(Rational(2), gen.traj.T());
    if (orc.rho_star > grid_min) {
      gridfail[static_cast<std::size_t>(i)] = "instance " + std::to_string(i) +
                                              ": exact optimum above the grid minimum";
      return;
    }
    if (grid_min - orc.rho_star > lip * h) {
      gridfail[static_cast<std::size_t>(i)] =
          "instance " + std::to_string(i) + ": grid minimum not within Lip*h of the optimum";
      return;
    }
  });
  long gbad = 0;
  std::string gfirst;
  for (auto& f : gridfail)
    if (!f.empty()) {
      ++gbad;
      if (gfirst.empty()) gfirst = f;
    }
  ck.detail("exact oracle matches a 2^20+1-point exhaustive grid on " +
                std::to_string(grid_instances) + " small instances",
            gbad == 0, gbad == 0 ? "within Lip*h, never above" : gfirst);
}

// ---------------------------------------------------------------------------
// Item 7: negative control
// ---------------------------------------------------------------------------
void item7(Context& ctx, ItemCheck& ck) {
  (void)ctx;
  const Interval unit(0, 1);
  const PiecewiseAffineMap1D id = PiecewiseAffineMap1D::identity(unit);
  const Rational d(1, 1000);
  GenOutput gen = gen_adversarial_drift(map_ref(id), 0, 300, d);
  ck.expect(gen.traj.defect == d, "drift defect is exactly d");
  // E(z) = max(|z|, |z - 0.3|) over [0, 1]: optimum T d / 2 at z = T d / 2.
  OracleResult orc = optimal_shadow_distance(id, gen.traj, unit);
  ck.detail("identity drift: rho*/d = 150 exactly", orc.rho_star == Rational(150) * d,
            "rho* = " + rational_str(orc.rho_star) + " at z* = " + rational_str(orc.z_star));
  ck.expect(orc.z_star == Rational(3, 20), "optimal point at T d/2");
  ck.expect(Rational(150) > Rational(109), "exceeds the hyperbolic constant 109");
}

// ---------------------------------------------------------------------------
// Item 8: conjugacy transfer
// ---------------------------------------------------------------------------
void item8(Context& ctx, ItemCheck& ck, long trials) {
  // Round-trip conjugation, piece for piece.
  const Rational M(32), m(3, 32);
  PiecewiseAffineMap1D g1 = conjugate_map(ctx.ex.map, M, m);
  PiecewiseAffineMap1D g2 = conjugate_map(g1, Rational(1) / M, Rational(-m * M));
  ck.detail("round-trip conjugation is piece-for-piece exact", g2 == ctx.ex.map);

  std::vector<std::string> failures(static_cast<std::size_t>(trials));
  parallel_for(trials, ctx.options.jobs, [&](long i) {
    LatticeRng rng(ctx.options.seed + 6000 + 7 * static_cast<std::uint64_t>(i));
    const long n = rng.uniform_int(1, 10);
    const Rational N = ScaledFamily::scale_width(n);
    const Rational dq = random_d(rng, 12, 20);
    GenOutput inner = i % 2 == 0
                          ? gen_crossing(ctx.ex, dq, rng.uniform_int(ctx.ex.constants.mu, 30),
                                         rng.uniform_int(ctx.ex.constants.mu, 30),
                                         ctx.options.seed + 2100 + static_cast<std::uint64_t>(i))
                          : gen_inblock(ctx.ex, "G1", rng.uniform_int(8, 60), dq,
                                        ctx.options.seed + 2200 + static_cast<std::uint64_t>(i));
    // Map the trajectory out to the scale-n copy.
    std::vector<Rational> pts;
    for (const auto& u : inner.traj.points) pts.push_back(N * u + 3 * N);
    PiecewiseAffineMap1D gprime = conjugate_map(ctx.ex.map, Rational(1) / N, 3 * N);
    Pseudotrajectory outer = measure_defect(gprime, std::move(pts));
    ShadowResult in_res;
    ShadowResult out_res = shadow_via_conjugacy(
        Rational(1) / N, 3 * N, outer, d_work(), [&](const Pseudotrajectory& inner_traj) {
          in_res = trichotomy_shadow(ctx.ex, inner_traj);
          return in_res;
        });
    for (std::size_t k = 0; k < out_res.per_step_errors.size(); ++k) {
      if (out_res.per_step_errors[k] * (Rational(1) / N) != in_res.per_step_errors[k]) {
        failures[static_cast<std::size_t>(i)] = "trial " + std::to_string(i) +
                                                ": errors not exactly M^-1 * inner";
        return;
      }
    }
    // Independent re-check through the conjugated map itself.
    Rational x = out_res.z;
    for (std::size_t k = 0; k < outer.points.size(); ++k) {
      if (k > 0) x = gprime.eval(x);
      if (rat_abs(x - outer.points[k]) != out_res.per_step_errors[k]) {
        failures[static_cast<std::size_t>(i)] = "trial " + std::to_string(i) +
                                                ": transferred orbit mismatch";
        return;
      }
    }
  });
  long bad = 0;
  std::string first;
  for (auto& f : failures)
    if (!f.empty()) {
      ++bad;
      if (first.empty()) first = f;
    }
  ck.detail("errors scale exactly by M^-1 through the conjugacy on " + std::to_string(trials) +
                " trials",
            bad == 0, bad == 0 ? "exact" : first);
}

}  // namespace

AcceptanceReport run_acceptance(const AcceptanceOptions& options) {
  Context ctx;
  ctx.options = options;

  struct Spec {
    int number;
    std::string title;
    double budget;
    std::function<void(Context&, ItemCheck&)> run;
  };
  const std::vector<Spec> specs = {
      {1, "exact rational identities of the reference maps", 1.0, item1},
      {2, "constants ledger (L1, L2, K1, LL, mu)", 1.0, item2},
      {3, "in-block shadowing bound 2d (>= 1000 trials)", 30.0,
       [](Context& c, ItemCheck& k) { item3(c, k, 1000); }},
      {4, "gluing construction bound 109d, interior 54d (>= 1000 trials)", 120.0,
       [](Context& c, ItemCheck& k) { item4(c, k, 1000); }},
      {5, "scaled-family pipeline: 109d segment / 44d rest-point (>= 500 trials)", 120.0,
       [](Context& c, ItemCheck& k) { item5(c, k, 40, 100); }},
      {6, "oracle domination + exhaustive-grid cross-check", 180.0,
       [](Context& c, ItemCheck& k) { item6(c, k, 100); }},
      {7, "negative control: identity map drift, ratio 150", 10.0, item7},
      {8, "conjugacy transfer exactness (100 trials)", 10.0,
       [](Context& c, ItemCheck& k) { item8(c, k, 100); }},
  };

  // The domination criterion consumes the trial records of items 3-5; when
  // asked for item 6 alone, run those producers silently first.
  if (options.only_item && *options.only_item == 6) {
    AcceptanceItem scratch;
    ItemCheck ck{&scratch};
    item3(ctx, ck, 1000);
    item4(ctx, ck, 1000);
    item5(ctx, ck, 40, 100);
  }

  AcceptanceReport report;
  report.all_pass = true;
  for (const auto& spec : specs) {
    if (options.only_item && *options.only_item != spec.number) continue;
    AcceptanceItem item;
    item.number = spec.number;
    item.title = spec.title;
    item.budget_seconds = spec.budget;
    ItemCheck ck{&item};
    const auto start = Clock::now();
    try {
      spec.run(ctx, ck);
    } catch (const std::exception& e) {
      ck.expect(false, std::string("exception: ") + e.what());
    }
    item.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    item.pass = item.failure.empty() && item.seconds < item.budget_seconds;
    if (item.failure.empty() && item.seconds >= item.budget_seconds)
      item.failure = "time budget exceeded";
    report.all_pass = report.all_pass && item.pass;
    report.items.push_back(std::move(item));
  }
  return report;
}

nlohmann::ordered_json acceptance_to_json(const AcceptanceReport& report) {
  nlohmann::ordered_json j;
  j["all_pass"] = report.all_pass;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& item : report.items) {
    nlohmann::ordered_json ij;
    ij["number"] = item.number;
    ij["title"] = item.title;
    ij["pass"] = item.pass;
    ij["checks"] = item.checks;
    ij["seconds"] = item.seconds;
    ij["budget_seconds"] = item.budget_seconds;
    if (!item.failure.empty()) ij["failure"] = item.failure;
    ij["details"] = nlohmann::ordered_json::array();
    for (const auto& d : item.details) {
      nlohmann::ordered_json dj;
      dj["name"] = d.name;
      dj["pass"] = d.pass;
      if (!d.note.empty()) dj["note"] = d.note;
      ij["details"].push_back(std::move(dj));
    }
    j["items"].push_back(std::move(ij));
  }
  return j;
}

void print_acceptance(std::ostream& out, const AcceptanceReport& report, bool verbose) {
  for (const auto& item : report.items) {
    std::ostringstream line;
    line << "[" << item.number << "/8] " << (item.pass ? "PASS" : "FAIL") << "  " << item.title
         << "  (" << item.checks << " checks, " << std::fixed;
    line.precision(2);
    line << item.seconds << " s, budget " << item.budget_seconds << " s)";
    out << line.str() << "\n";
    if (!item.pass && !item.failure.empty()) out << "       cause: " << item.failure << "\n";
    if (verbose)
      for (const auto& d : item.details)
        out << "       - " << (d.pass ? "ok  " : "FAIL") << " " << d.name
            << (d.note.empty() ? "" : "  [" + d.note + "]") << "\n";
  }
  out << (report.all_pass ? "ALL CRITERIA PASS" : "CRITERIA FAILED") << "\n";
}

}  // namespace lipshadow
