#include "lipshadow/oracle.hpp"

#include <algorithm>

#include "lipshadow/errors.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/parallel.hpp"

namespace lipshadow {

std::string oracle_method_name(OracleMethod m) {
  switch (m) {
    case OracleMethod::ExactBreakpoints:
      return "exact_breakpoints";
    case OracleMethod::ExactMonotone:
      return "exact_monotone";
    case OracleMethod::GridRefine:
      return "grid_refine";
  }
  return "?";
}

Interval default_search(const Pseudotrajectory& traj, const ShadowingConstants& c) {
  return neighborhood(traj.points.front(), c.LL * traj.defect);
}

namespace {

struct Line {
  Rational a, b;
  Rational at(const Rational& z) const { return a * z + b; }
};

// Minimum over [lo, hi] of max_i (a_i z + b_i); ties resolve to the smallest
// z. Upper-hull construction, exact arithmetic throughout.
std::pair<Rational, Rational> min_of_max(std::vector<Line> lines, const Rational& lo,
                                         const Rational& hi) {
  std::sort(lines.begin(), lines.end(), [](const Line& l, const Line& r) {
    return l.a < r.a || (l.a == r.a && l.b < r.b);
  });
  std::vector<Line> uniq;  // per slope only the largest intercept matters
  for (auto& l : lines) {
    if (!uniq.empty() && uniq.back().a == l.a)
      uniq.back() = l;
    else
      uniq.push_back(l);
  }
  auto cross = [](const Line& l, const Line& m) -> Rational {
    return Rational(l.b - m.b) / Rational(m.a - l.a);
  };
  std::vector<Line> hull;
  for (const auto& l : uniq) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back()))
      hull.pop_back();
    hull.push_back(l);
  }
  std::optional<std::pair<Rational, Rational>> best;  // (value, z)
  auto offer = [&](const Rational& value, const Rational& z) {
    if (!best || value < best->first || (value == best->first && z < best->second))
      best = {value, z};
  };
  for (std::size_t i = 0; i < hull.size(); ++i) {
    Rational seg_lo = i == 0 ? lo : std::max(lo, Rational(cross(hull[i - 1], hull[i])));
    Rational seg_hi =
        i + 1 == hull.size() ? hi : std::min(hi, Rational(cross(hull[i], hull[i + 1])));
    if (seg_lo > seg_hi) continue;
    offer(hull[i].at(seg_lo), seg_lo);
    offer(hull[i].at(seg_hi), seg_hi);
  }
  if (!best) throw std::logic_error("empty envelope");
  return {best->second, best->first};
}

// Orbit of z with slope products: the 2(T+1) lines of the error envelope,
// valid on any bracket on which every iterate is affine.
std::vector<Line> local_lines(const std::function<std::pair<Rational, Rational>(const Rational&)>&
                                  eval_traced,
                              const Pseudotrajectory& traj, const Rational& z) {
  std::vector<Line> lines;
  lines.reserve(2 * traj.points.size());
  Rational x = z, sigma = 1;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    if (k > 0) {
      auto [value, slope] = eval_traced(x);
      x = value;
      sigma *= slope;
    }
    const Rational v = x - traj.points[k];
    lines.push_back(Line{sigma, v - sigma * z});
    lines.push_back(Line{-sigma, sigma * z - v});
  }
  return lines;
}

Rational eval_envelope(const std::vector<Line>& lines, const Rational& z) {
  Rational best = lines.front().at(z);
  for (std::size_t i = 1; i < lines.size(); ++i) best = std::max(best, lines[i].at(z));
  return best;
}

struct EnvelopeProbe {
  Rational value;  // E(z)
  Rational arrow;  // Phi(z) - Psi(z): its sign locates the quasiconvex minimum
};

EnvelopeProbe probe(const MapRef& map, const Pseudotrajectory& traj, const Rational& z) {
  Rational x = z;
  Rational phi, psi;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    if (k > 0) x = map.eval(x);
    const Rational v = x - traj.points[k];
    if (k == 0) {
      phi = v;
      psi = -v;
    } else {
      phi = std::max(phi, v);
      psi = std::max(psi, Rational(-v));
    }
  }
  return {std::max(phi, psi), phi - psi};
}

// ---------------------------------------------------------------------------
// Quasiconvex minimization for strictly increasing maps.
//
// Phi(z) = max_k (f^k(z) - x_k) is strictly increasing, Psi strictly
// decreasing, so E = max(Phi, Psi) has a unique minimizer: the crossing of
// Phi and Psi (or a clamp at the search boundary). The bracket around the
// crossing narrows by probing exact pullbacks of piece boundaries; once no
// boundary cuts any forward window of the bracket, every iterate is affine
// there and the line envelope finishes the job. Probed pullbacks leave the
// open windows one by one (and only finitely many sit above the crossing),
// which forces termination.
// ---------------------------------------------------------------------------

struct MonotoneOps {
  std::function<Rational(const Rational&)> eval;
  std::function<std::pair<Rational, Rational>(const Rational&)> eval_traced;
  // Some piece boundary strictly inside (lo, hi) near the probe value, if any.
  std::function<std::optional<Rational>(const Rational& lo, const Rational& hi,
                                        const Rational& probe)>
      boundary_inside;
  std::function<Rational(const Rational&)> eval_inverse;
};

// Orbit of z together with the Phi/Psi probe values derived from it.
struct OrbitProbe {
  std::vector<Rational> orbit;
  Rational value;
  Rational arrow;
};

OrbitProbe orbit_probe(const MonotoneOps& ops, const Pseudotrajectory& traj, const Rational& z) {
  OrbitProbe out;
  out.orbit.reserve(traj.points.size());
  Rational x = z;
  Rational phi, psi;
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    if (k > 0) x = ops.eval(x);
    out.orbit.push_back(x);
    const Rational v = x - traj.points[k];
    if (k == 0) {
      phi = v;
      psi = -v;
    } else {
      phi = std::max(phi, v);
      psi = std::max(psi, Rational(-v));
    }
  }
  out.value = std::max(phi, psi);
  out.arrow = phi - psi;
  return out;
}

// A piece boundary separating the cached endpoint orbits, pulled back into
// the bracket; nullopt when every iterate is affine between them.
std::optional<Rational> split_point(const MonotoneOps& ops, const OrbitProbe& lo,
                                    const OrbitProbe& hi, const Rational& a, const Rational& b) {
  Rational um = (a + b) / 2;
  for (std::size_t k = 0; k < lo.orbit.size(); ++k) {
    if (k > 0) um = ops.eval(um);
    auto w = ops.boundary_inside(lo.orbit[k], hi.orbit[k], um);
    if (!w) continue;
    Rational z = *w;
    for (std::size_t j = 0; j < k; ++j) z = ops.eval_inverse(z);
    return z;
  }
  return std::nullopt;
}

OracleResult monotone_minimize(const MonotoneOps& ops, const Pseudotrajectory& traj,
                               const Interval& search, OracleMethod method) {
  OracleResult res;
  res.method = method;
  std::uint64_t evals = 0;
  auto at = [&](const Rational& z) {
    evals += traj.points.size();
    return orbit_probe(ops, traj, z);
  };

  auto finish = [&](const Rational& z, const Rational& value) {
    res.z_star = z;
    res.rho_star = value;
    res.evaluations = evals;
    return res;
  };

  OrbitProbe lo_probe = at(search.lo);
  if (lo_probe.arrow >= 0) return finish(search.lo, lo_probe.value);
  OrbitProbe hi_probe = at(search.hi);
  if (hi_probe.arrow <= 0) return finish(search.hi, hi_probe.value);

  Rational a = search.lo, b = search.hi;
  while (true) {
    auto split = split_point(ops, lo_probe, hi_probe, a, b);
    evals += traj.points.size();
    if (!split) break;  // every iterate affine on [a, b]
    OrbitProbe pr = at(*split);
    if (pr.arrow == 0) return finish(*split, pr.value);
    if (pr.arrow < 0) {
      a = *split;
      lo_probe = std::move(pr);
    } else {
      b = *split;
      hi_probe = std::move(pr);
    }
  }
  auto lines = local_lines(ops.eval_traced, traj, Interval(a, b).midpoint());
  evals += traj.points.size();
  auto [z, value] = min_of_max(std::move(lines), a, b);
  return finish(z, value);
}

MonotoneOps ops_for(const PiecewiseAffineMap1D& map) {
  MonotoneOps ops;
  ops.eval = [&map](const Rational& x) { return map.eval(x); };
  ops.eval_traced = [&map](const Rational& x) {
    const auto& piece = map.pieces()[map.piece_index_at(x)];
    return std::make_pair(piece.at(x), piece.slope);
  };
  ops.boundary_inside = [&map](const Rational& lo, const Rational& hi,
                               const Rational& pr) -> std::optional<Rational> {
    const auto& piece = map.pieces()[map.piece_index_at(pr)];
    if (piece.domain.lo > lo && piece.domain.lo < hi) return piece.domain.lo;
    if (piece.domain.hi > lo && piece.domain.hi < hi) return piece.domain.hi;
    return std::nullopt;
  };
  ops.eval_inverse = [&map](const Rational& w) -> Rational {
    // Increasing map: piece images are ordered, so the owner of w is the
    // first piece whose right endpoint maps at or above w.
    const auto& pieces = map.pieces();
    std::size_t lo = 0, hi = pieces.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (pieces[mid].at(pieces[mid].domain.hi) < w)
        lo = mid + 1;
      else
        hi = mid;
    }
    const auto& piece = pieces[lo];
    if (piece.slope == 0) return piece.domain.lo;
    return (w - piece.intercept) / piece.slope;
  };
  return ops;
}

MonotoneOps ops_for(const ScaledFamily& f) {
  MonotoneOps ops;
  ops.eval = [&f](const Rational& x) { return f.eval(x); };
  ops.eval_traced = [&f](const Rational& x) { return f.eval_traced(x); };
  ops.boundary_inside = [&f](const Rational& lo, const Rational& hi,
                             const Rational& pr) -> std::optional<Rational> {
    if (lo < 0 && 0 < hi && !(pr == 0)) return Rational(0);
    if (pr == 0) return std::nullopt;
    const Rational apr = rat_abs(pr);
    const auto m = f.scale_map(ScaledFamily::scale_of(apr));
    const auto& piece = m->pieces()[m->piece_index_at(apr)];
    for (Rational w : {piece.domain.lo, piece.domain.hi}) {
      if (pr < 0) w = -w;
      if (w > lo && w < hi) return w;
    }
    return std::nullopt;
  };
  ops.eval_inverse = [&f](const Rational& w) { return f.eval_inverse(w); };
  return ops;
}

Rational lipschitz_power(const Rational& L0, long T) {
  return rat_pow(std::max(L0, Rational(1)), T);
}

OracleResult grid_refine(const MapRef& map, const Rational& L0, const Pseudotrajectory& traj,
                         const Interval& search) {
  OracleResult res;
  res.method = OracleMethod::GridRefine;
  const Rational d = traj.defect;
  Rational h = d > 0 ? Rational(d / 100) : Rational(search.length() / 1000000);
  if (h <= 0) h = Rational(1, 1000000);
  long n = 16;
  if (search.length() > 0) {
    const double cells = Rational(search.length() / h).get_d();
    n = std::min<long>(std::max<long>(static_cast<long>(cells) + 1, 16), 4000000);
  }
  const Rational step = search.length() / n;
  std::optional<std::pair<Rational, Rational>> best;  // (value, z)
  std::uint64_t evals = 0;
  for (long i = 0; i <= n; ++i) {
    const Rational z = search.lo + step * i;
    auto pr = probe(map, traj, z);
    evals += traj.points.size();
    if (!best || pr.value < best->first || (pr.value == best->first && z < best->second))
      best = {pr.value, z};
  }
  Rational lo = std::max(search.lo, Rational(best->second - step));
  Rational hi = std::min(search.hi, Rational(best->second + step));
  for (int it = 0; it < 60 && hi - lo > 0; ++it) {
    const Rational m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    auto p1 = probe(map, traj, m1), p2 = probe(map, traj, m2);
    evals += 2 * traj.points.size();
    if (p1.value < best->first || (p1.value == best->first && m1 < best->second))
      best = {p1.value, m1};
    if (p2.value < best->first || (p2.value == best->first && m2 < best->second))
      best = {p2.value, m2};
    if (p1.value <= p2.value)
      hi = m2;
    else
      lo = m1;
  }
  res.z_star = best->second;
  res.rho_star = best->first;
  res.evaluations = evals;
  res.bracket_halfwidth = lipschitz_power(L0, traj.T()) * step / 2;
  return res;
}

// Generic exact path for non-monotone maps: scan every breakpoint-free cell,
// prune with the convex tangent bound, resolve survivors by the envelope.
OracleResult envelope_exact(const PiecewiseAffineMap1D& map, const Pseudotrajectory& traj,
                            const Interval& search, const std::vector<Rational>& breakpoints) {
  OracleResult res;
  res.method = OracleMethod::ExactBreakpoints;
  auto traced = ops_for(map).eval_traced;
  std::vector<Rational> grid{search.lo};
  for (const auto& w : breakpoints) grid.push_back(w);
  grid.push_back(search.hi);
  std::optional<std::pair<Rational, Rational>> best;  // (value, z)
  auto offer = [&](const Rational& value, const Rational& z) {
    if (!best || value < best->first || (value == best->first && z < best->second))
      best = {value, z};
  };
  std::uint64_t evals = 0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const Rational &a = grid[i], &b = grid[i + 1];
    if (a == b) continue;
    auto lines = local_lines(traced, traj, Interval(a, b).midpoint());
    evals += traj.points.size();
    const Rational ea = eval_envelope(lines, a), eb = eval_envelope(lines, b);
    offer(ea, a);
    offer(eb, b);
    std::optional<Rational> da, db;  // one-sided envelope slopes at the edges
    for (const auto& l : lines) {
      if (l.at(a) == ea) da = da ? std::max(*da, l.a) : l.a;
      if (l.at(b) == eb) db = db ? std::min(*db, l.a) : l.a;
    }
    if (*da >= 0 || *db <= 0) continue;  // no interior minimum
    const Rational zx = (eb - ea + (*da) * a - (*db) * b) / (*da - *db);
    const Rational lb = ea + (*da) * (zx - a);
    if (best && (lb > best->first || (lb == best->first && a > best->second))) continue;
    auto [z, value] = min_of_max(std::move(lines), a, b);
    offer(value, z);
  }
  res.z_star = best->second;
  res.rho_star = best->first;
  res.evaluations = evals;
  return res;
}

}  // namespace

OracleResult optimal_shadow_distance(const PiecewiseAffineMap1D& map,
                                     const Pseudotrajectory& traj, const Interval& search,
                                     std::size_t piece_cap) {
  if (!map.domain().contains(search))
    throw OutOfDomainError("search interval " + search.str() + " outside the map domain");
  if (search.is_point() || traj.T() == 0) {
    OracleResult res;
    res.method = OracleMethod::ExactBreakpoints;
    if (search.is_point()) {
      res.z_star = search.lo;
      res.rho_star = probe(map_ref(map), traj, search.lo).value;
    } else {
      // E(z) = |z - x_0|: minimum at the clamp of x_0 into the window.
      res.z_star = std::min(std::max(traj.points[0], search.lo), search.hi);
      res.rho_star = rat_abs(res.z_star - traj.points[0]);
    }
    res.evaluations = traj.points.size();
    return res;
  }

  OracleResult res;
  if (map.strictly_increasing()) {
    // The quasiconvex pullback bisection reaches the same exact optimum as
    // the full composed enumeration while touching only the breakpoints it
    // bisects through; at long horizons this avoids composing maps whose
    // intercepts carry hundreds of bits.
    res = monotone_minimize(ops_for(map), traj, search, OracleMethod::ExactBreakpoints);
  } else {
    std::vector<Rational> breakpoints;
    bool budget_ok = true;
    try {
      PiecewiseAffineMap1D g = PiecewiseAffineMap1D::identity(search);
      for (long k = 1; k <= traj.T(); ++k) {
        g = compose(map, g, piece_cap);
        for (const auto& piece : g.pieces())
          if (piece.domain.lo > search.lo && piece.domain.lo < search.hi)
            breakpoints.push_back(piece.domain.lo);
      }
    } catch (const PieceBudgetExceeded&) {
      budget_ok = false;
    }
    if (!budget_ok) return grid_refine(map_ref(map), map.lipschitz_constant(), traj, search);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    res = envelope_exact(map, traj, search, breakpoints);
  }
  auto check = probe(map_ref(map), traj, res.z_star);
  if (check.value != res.rho_star)
    throw std::logic_error("oracle self-check failed: envelope value mismatch");
  res.evaluations += traj.points.size();
  return res;
}

OracleResult optimal_shadow_distance(const ScaledFamily& f, const Pseudotrajectory& traj,
                                     const Interval& search, std::size_t piece_cap) {
  if (!f.domain().contains(search)) throw OutOfDomainError("search interval outside [-1, 1]");
  // Hull of the forward windows (monotone: endpoint images suffice).
  Interval hull = search;
  Rational lo = search.lo, hi = search.hi;
  for (long k = 0; k < traj.T(); ++k) {
    lo = f.eval(lo);
    hi = f.eval(hi);
    hull = hull.hull(Interval(lo, hi));
  }
  try {
    PiecewiseAffineMap1D m = f.materialize(hull, std::min<std::size_t>(piece_cap, 4096));
    return optimal_shadow_distance(m, traj, search, piece_cap);
  } catch (const PieceBudgetExceeded&) {
    // Window reaches the accumulation point; use the pullback bisection.
  }
  OracleResult res =
      monotone_minimize(ops_for(f), traj, search, OracleMethod::ExactMonotone);
  auto check = probe(f.ref(), traj, res.z_star);
  if (check.value != res.rho_star)
    throw std::logic_error("oracle self-check failed: envelope value mismatch");
  res.evaluations += traj.points.size();
  return res;
}

SweepResult empirical_lipschitz_constant(const ExampleF0& ex, long trials_per_d,
                                         const std::vector<Rational>& d_values,
                                         std::optional<Rational> flag_bound, std::uint64_t seed,
                                         int jobs) {
  for (const auto& d : d_values)
    if (d > d_work())
      throw PreconditionViolated("sweep value d = " + rational_str(d) + " above d_work");
  SweepResult out;
  out.bound = flag_bound;
  out.overall_max_ratio = 0;
  const long total = trials_per_d * static_cast<long>(d_values.size());
  out.rows.resize(static_cast<std::size_t>(total));

  parallel_for(total, jobs, [&](long i) {
    const std::size_t di = static_cast<std::size_t>(i) / static_cast<std::size_t>(trials_per_d);
    const long trial = i % trials_per_d;
    const Rational d = d_values[di];
    LatticeRng rng(seed + 0x51ed2701ull * static_cast<std::uint64_t>(i));
    GenOutput gen;
    SweepRow row;
    row.d = d;
    row.trial = trial;
    if (trial % 2 == 0) {
      row.kind = "perturbed";
      GenSpec spec;
      spec.kind = GenSpec::Kind::Perturbed;
      spec.x0 = rng.uniform(Interval(Rational(1, 2), Rational(9, 8)));
      spec.T = rng.uniform_int(20, 120);
      spec.d_target = d;
      spec.seed = seed + static_cast<std::uint64_t>(i);
      gen = gen_perturbed(map_ref(ex.map), spec);
    } else {
      row.kind = "crossing";
      gen = gen_crossing(ex, d, rng.uniform_int(ex.constants.mu, 40),
                         rng.uniform_int(ex.constants.mu, 40),
                         seed + static_cast<std::uint64_t>(i));
    }
    OracleResult orc =
        optimal_shadow_distance(ex.map, gen.traj, default_search(gen.traj, ex.constants));
    row.rho = orc.rho_star;
    row.method = orc.method;
    row.ratio = gen.traj.defect > 0 ? Rational(orc.rho_star / gen.traj.defect) : Rational(0);
    row.flagged = flag_bound && gen.traj.defect > 0 && row.ratio > *flag_bound;
    out.rows[static_cast<std::size_t>(i)] = std::move(row);
  });

  for (std::size_t di = 0; di < d_values.size(); ++di) {
    SweepStats st;
    st.d = d_values[di];
    std::vector<Rational> ratios;
    Rational sum = 0;
    for (long t = 0; t < trials_per_d; ++t) {
      const auto& row =
          out.rows[di * static_cast<std::size_t>(trials_per_d) + static_cast<std::size_t>(t)];
      ratios.push_back(row.ratio);
      sum += row.ratio;
      if (row.flagged) ++out.flagged;
    }
    st.trials = trials_per_d;
    std::sort(ratios.begin(), ratios.end());
    st.max_ratio = ratios.back();
    st.mean_ratio = sum / trials_per_d;
    st.median_ratio = ratios[ratios.size() / 2];
    out.overall_max_ratio = std::max(out.overall_max_ratio, st.max_ratio);
    out.per_d.push_back(std::move(st));
  }
  return out;
}

}  // namespace lipshadow
