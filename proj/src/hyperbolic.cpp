#include "lipshadow/hyperbolic.hpp"

#include <algorithm>
#include <sstream>

#include "lipshadow/errors.hpp"

namespace lipshadow {

const Block1D* HyperbolicAtlas1D::find(const std::string& id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

const Block1D& HyperbolicAtlas1D::at(const std::string& id) const {
  const Block1D* b = find(id);
  if (!b) throw std::invalid_argument("no block with id " + id);
  return *b;
}

ShadowingConstants derive_constants(const Rational& lambda, const Rational& L0, const Rational& K,
                                    const Rational& d0) {
  if (!(lambda > 0 && lambda < 1)) throw InvalidConstants("lambda must lie in (0,1)");
  if (L0 < 1) throw InvalidConstants("L0 must be >= 1");
  if (K < L0 + 1) throw InvalidConstants("K must be >= L0 + 1");
  if (d0 <= 0) throw InvalidConstants("d0 must be positive");
  ShadowingConstants c;
  c.lambda = lambda;
  c.L0 = L0;
  c.L1 = Rational(1) / (1 - lambda);
  c.L2 = c.L1 + L0 + 1;
  c.K = K;
  c.K1 = K + c.L1;
  c.LL = L0 * (c.L1 + 2 * K) + 1;
  c.d0 = d0;
  Rational pw = 1;
  long mu = 0;
  while (pw * K >= 1) {
    pw *= lambda;
    ++mu;
  }
  c.mu = mu;
  return c;
}

Interval neighborhood(const Rational& p, const Rational& delta) {
  if (delta < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
  return Interval(p - delta, p + delta);
}

BoxND neighborhood_nd(const PointND& p, double delta) {
  if (delta < 0) throw std::invalid_argument("neighborhood radius must be >= 0");
  return BoxND{p.array() - delta, p.array() + delta};
}

std::optional<Interval> h_set(const Interval& region, const Rational& delta) {
  if (delta < 0) throw std::invalid_argument("h_set shrink must be >= 0");
  return region.shrink(delta);
}

std::optional<BoxND> h_set_nd(const BoxND& region, double delta) {
  if (delta < 0) throw std::invalid_argument("h_set shrink must be >= 0");
  return region.shrink(delta);
}

Interval Disk1D::realize(const Block1D& block) const {
  if (block.kind == BlockKind::Unstable) return Interval(anchor - d1, anchor + d1);
  return Interval::point(anchor + offset);
}

bool Disk1D::in_class(const Block1D& block, const Rational& delta1, const Rational& delta2) const {
  if (block.kind == BlockKind::Unstable) return d1 == delta1 && offset == 0;
  // Degenerate (u = 0) convention: points within min(delta1, delta2).
  return d1 == delta1 && rat_abs(offset) <= std::min(delta1, delta2);
}

Disk1D map_disk(const Block1D& block, const Rational& lambda, const Disk1D& disk,
                const Rational& image_anchor) {
  std::vector<std::string> bad;
  if (disk.block_id != block.id) bad.push_back("disk belongs to block " + disk.block_id);
  const Rational delta = std::max(disk.d1, disk.d2);
  if (!h_set(block.region, delta) ||
      !h_set(block.region, delta)->contains(disk.anchor))
    bad.push_back("anchor not in H_l(max(d1,d2))");
  if (!block.region.contains(image_anchor)) bad.push_back("image anchor leaves the block");
  if (!bad.empty()) {
    std::string msg = "map_disk preconditions failed:";
    for (auto& s : bad) msg += " " + s + ";";
    throw PreconditionViolated(msg, bad);
  }
  Disk1D out;
  out.block_id = block.id;
  out.anchor = image_anchor;
  out.d1 = disk.d1 / lambda;
  out.d2 = lambda * disk.d2;
  out.offset = block.kind == BlockKind::Stable ? Rational(block.rate * disk.offset) : Rational(0);
  return out;
}

namespace {

std::string rat2(const Rational& a, const Rational& b) {
  return rational_str(a) + ", " + rational_str(b);
}

}  // namespace

CertificateReport verify_block_form(const HyperbolicAtlas1D& atlas,
                                    const PiecewiseAffineMap1D& map) {
  CertificateReport report;
  report.pass = true;
  if (!(atlas.lambda > 0 && atlas.lambda < 1)) {
    report.pass = false;
    report.notes = "lambda outside (0,1)";
  }
  for (const auto& block : atlas.blocks) {
    BlockCheck bc;
    bc.block_id = block.id;
    if (!map.domain().contains(block.region))
      throw PreconditionViolated("map domain does not cover block " + block.id);

    // Norm side of Eq. (0): |A| <= lambda for stable, |B^{-1}| <= lambda for
    // unstable; exact rational comparison.
    if (block.kind == BlockKind::Stable) {
      Rational n = rat_abs(block.rate);
      bc.norm_ok = n <= atlas.lambda;
      bc.norm_detail = "|A| = " + rational_str(n);
    } else {
      if (block.rate == 0) {
        bc.norm_ok = false;
        bc.norm_detail = "B = 0 not invertible";
      } else {
        Rational n = rat_abs(Rational(1) / block.rate);
        bc.norm_ok = n <= atlas.lambda;
        bc.norm_detail = "|B^-1| = " + rational_str(n);
      }
    }

    // Block-affine form: every piece overlapping the region in more than a
    // point must carry the block rate (continuity handles intercepts).
    bc.affine_ok = true;
    for (const auto& piece : map.pieces()) {
      auto cut = piece.domain.intersect(block.region);
      if (!cut || cut->is_point()) continue;
      if (piece.slope != block.rate) {
        bc.affine_ok = false;
        bc.affine_detail += "piece on " + piece.domain.str() + " has slope " +
                            rational_str(piece.slope) + " != " + rational_str(block.rate) + "; ";
      }
    }
    if (bc.affine_ok) bc.affine_detail = "all overlapping pieces match rate";
    report.pass = report.pass && bc.ok();
    report.blocks.push_back(std::move(bc));
  }
  // Disjoint interiors across blocks.
  for (std::size_t i = 0; i < atlas.blocks.size(); ++i)
    for (std::size_t j = i + 1; j < atlas.blocks.size(); ++j) {
      auto cut = atlas.blocks[i].region.intersect(atlas.blocks[j].region);
      if (cut && !cut->is_point()) {
        report.pass = false;
        report.notes += "blocks " + atlas.blocks[i].id + " and " + atlas.blocks[j].id +
                        " overlap in " + cut->str() + "; ";
      }
    }
  return report;
}

TransitionCheck check_transition(const PiecewiseAffineMap1D& map, const HyperbolicAtlas1D& atlas,
                             const ShadowingConstants& c, const Rational& p, const Rational& q,
                             const Rational& r, const Disk1D& disk, const Rational& d) {
  std::vector<std::string> bad;
  const Rational Kd = c.K * d;
  if (d < 0 || d > c.d0) bad.push_back("(d<=d0)");

  const Block1D* lblk = atlas.find(disk.block_id);
  if (!lblk) throw std::invalid_argument("disk names unknown block " + disk.block_id);

  // (2.1): p in G_l, f^2(p) in G_m for some m != l.
  std::optional<Rational> f2p;
  const Block1D* mblk = nullptr;
  if (!lblk->region.contains(p)) bad.push_back("(2.1)");
  try {
    Rational fp = map.eval(p);
    f2p = map.eval(fp);
  } catch (const OutOfDomainError&) {
    bad.push_back("(2.1)");
  }
  if (f2p) {
    for (const auto& b : atlas.blocks) {
      if (b.id == lblk->id || !b.region.contains(*f2p)) continue;
      auto hm = h_set(b.region, Kd);
      mblk = &b;
      if (hm && hm->contains(r)) break;  // prefer the block whose H-set holds r
    }
    if (!mblk) bad.push_back("(2.1)");
  }

  // (2.2): q in H_l(Kd), r in H_m(Kd).
  auto hl = h_set(lblk->region, Kd);
  if (!hl || !hl->contains(q)) bad.push_back("(2.2)");
  if (mblk) {
    auto hm = h_set(mblk->region, Kd);
    if (!hm || !hm->contains(r)) bad.push_back("(2.2)");
  }

  // (2.3): |p-q| <= L1 d, |f^2(p)-r| <= L2 d.
  if (rat_abs(p - q) > c.L1 * d) bad.push_back("(2.3)");
  if (f2p && rat_abs(*f2p - r) > c.L2 * d) bad.push_back("(2.3)");

  // (2.4): disk in D(Kd, d, q).
  if (disk.anchor != q || !disk.in_class(*lblk, Kd, d)) bad.push_back("(2.4)");

  if (!bad.empty()) {
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    std::string msg = "Condition 2 preconditions failed:";
    for (auto& s : bad) msg += " " + s;
    throw PreconditionViolated(msg, bad);
  }

  const Interval D = disk.realize(*lblk);
  const Interval f2D = map.image(map.image(D));
  TransitionCheck res;
  if (mblk->kind == BlockKind::Unstable) {
    const Interval want(r - d, r + d);
    res.ok = f2D.contains(want);
    res.witness = Disk1D{mblk->id, r, d, Kd, 0};
    res.detail = "f^2(D) = " + f2D.str() + (res.ok ? " contains " : " misses ") + want.str();
  } else {
    auto cut = f2D.intersect(Interval(r - d, r + d));
    res.ok = cut.has_value();
    Rational rprime = r;
    if (cut) {
      if (r < cut->lo)
        rprime = cut->lo;
      else if (r > cut->hi)
        rprime = cut->hi;
    }
    res.witness = Disk1D{mblk->id, r, d, Kd, rprime - r};
    res.detail = "f^2(D) = " + f2D.str() +
                 (res.ok ? " meets [" + rat2(r - d, r + d) + "]" : " misses the d-ball at r");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Universal Condition-2 margins
// ---------------------------------------------------------------------------

namespace {

// Candidate p values where any of the piecewise-affine margin terms can kink.
void add_if_inside(std::vector<Rational>& cands, const Interval& window, const Rational& v) {
  if (window.contains(v)) cands.push_back(v);
}

}  // namespace

std::vector<TransitionPairCheck> verify_transitions_universal(const PiecewiseAffineMap1D& map,
                                                        const HyperbolicAtlas1D& atlas,
                                                        const ShadowingConstants& c,
                                                        const Rational& d,
                                                        std::size_t piece_cap) {
  if (!map.strictly_increasing())
    throw PreconditionViolated("universal Condition-2 check requires a strictly increasing map");
  if (d <= 0) throw std::invalid_argument("universal check needs d > 0");
  const Rational Kd = c.K * d;
  const Rational L1d = c.L1 * d, L2d = c.L2 * d;
  const PiecewiseAffineMap1D F = compose(map, map, piece_cap);

  std::vector<Rational> fbreaks;
  for (const auto& piece : F.pieces()) fbreaks.push_back(piece.domain.lo);
  fbreaks.push_back(F.domain().hi);

  std::vector<TransitionPairCheck> out;
  for (const auto& lb : atlas.blocks) {
    for (const auto& mb : atlas.blocks) {
      if (lb.id == mb.id) continue;
      TransitionPairCheck pc;
      pc.from = lb.id;
      pc.to = mb.id;
      pc.d = d;
      auto Sl = h_set(lb.region, Kd);
      auto Sm = h_set(mb.region, Kd);
      if (!Sl || !Sm) {
        pc.feasible = false;
        pc.detail = "H-set empty at this d";
        out.push_back(std::move(pc));
        continue;
      }
      // p-set: {p in G_l : F(p) in G_m}.
      std::vector<Interval> pset;
      for (const auto& ji : F.restrict(lb.region).preimage(mb.region)) pset.push_back(ji);
      if (pset.empty()) {
        pc.feasible = false;
        pc.detail = "no p with f^2(p) in target block";
        out.push_back(std::move(pc));
        continue;
      }

      // Quantified radii: the source disk is the full [q +- Kd] interval for
      // an unstable source; for a stable source it is any point of [q +- d].
      const bool src_unstable = lb.kind == BlockKind::Unstable;
      const bool tgt_unstable = mb.kind == BlockKind::Unstable;
      const Rational src_r = src_unstable ? Kd : d;

      auto qmin = [&](const Rational& p) { return std::max(Sl->lo, Rational(p - L1d)); };
      auto qmax = [&](const Rational& p) { return std::min(Sl->hi, Rational(p + L1d)); };
      auto rmin = [&](const Rational& p) { return std::max(Sm->lo, Rational(F.eval(p) - L2d)); };
      auto rmax = [&](const Rational& p) { return std::min(Sm->hi, Rational(F.eval(p) + L2d)); };

      // Left/right reach of f^2(D) as the quantifiers run; for a stable
      // source this is the worst single point.
      auto reach_left = [&](const Rational& p) { return F.eval(qmax(p) - src_r); };
      auto reach_left_best = [&](const Rational& p) { return F.eval(qmin(p) - src_r); };
      auto reach_right = [&](const Rational& p) { return F.eval(qmin(p) + src_r); };
      auto reach_right_worstpt = [&](const Rational& p) { return F.eval(qmax(p) + src_r); };

      auto margins = [&](const Rational& p) -> std::vector<Rational> {
        if (src_unstable && tgt_unstable)
          return {Rational((rmin(p) - d) - reach_left(p)),
                  Rational(reach_right(p) - (rmax(p) + d))};
        if (src_unstable && !tgt_unstable)
          return {Rational(reach_right(p) - (rmax(p) - d)),
                  Rational((rmin(p) + d) - reach_left(p))};
        if (!src_unstable && !tgt_unstable)
          // Every point f^2(q') must land inside every [r - d, r + d].
          return {Rational(reach_left_best(p) - (rmax(p) - d)),
                  Rational((rmin(p) + d) - reach_right_worstpt(p))};
        // Stable source, unstable target: a point image cannot contain a
        // d-ball; any feasible configuration fails.
        return {Rational(-1)};
      };

      bool any_feasible = false;
      bool first_margin = true;
      for (const auto& pwin : pset) {
        // Candidate breakpoints in p.
        std::vector<Rational> cands{pwin.lo, pwin.hi};
        add_if_inside(cands, pwin, Sl->lo + L1d);   // qmin switch
        add_if_inside(cands, pwin, Sl->hi - L1d);   // qmax switch
        add_if_inside(cands, pwin, Sl->lo - L1d);   // q feasibility edge
        add_if_inside(cands, pwin, Sl->hi + L1d);
        for (const Rational& b : fbreaks) {
          add_if_inside(cands, pwin, b);  // F(p) kinks
          // Arguments of F inside the reach terms cross breakpoint b.
          add_if_inside(cands, pwin, b - L1d + src_r);  // qmin + src_r branch p - L1d
          add_if_inside(cands, pwin, b + L1d - src_r);  // qmax - src_r branch p + L1d
          add_if_inside(cands, pwin, b + L1d + src_r);
          add_if_inside(cands, pwin, b - L1d - src_r);
        }
        // r-side switch points: F(p) = Sm.lo + L2d etc.; F is increasing, so
        // each has at most one solution interval boundary.
        for (const Rational& level :
             {Rational(Sm->lo + L2d), Rational(Sm->hi - L2d), Rational(Sm->lo - L2d),
              Rational(Sm->hi + L2d)}) {
          for (const auto& ji : F.preimage(Interval::point(level)))
            add_if_inside(cands, pwin, ji.lo);
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

        for (const Rational& p : cands) {
          if (qmin(p) > qmax(p) || rmin(p) > rmax(p)) continue;  // vacuous
          any_feasible = true;
          for (const Rational& mg : margins(p)) {
            if (first_margin || mg < pc.min_margin) {
              pc.min_margin = mg;
              pc.witness_p = p;
              first_margin = false;
            }
          }
        }
      }
      pc.feasible = any_feasible;
      pc.pass = !any_feasible || pc.min_margin >= 0;
      if (any_feasible)
        pc.detail = "min margin " + rational_str(pc.min_margin) + " at p = " +
                    rational_str(pc.witness_p);
      else
        pc.detail = "no admissible (p,q,r) at this d";
      out.push_back(std::move(pc));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// nD lane
// ---------------------------------------------------------------------------

namespace {

void check_splitting(const BlockND& b, int dim) {
  std::vector<bool> seen(static_cast<std::size_t>(dim), false);
  for (int a : b.splitting.stable_axes) seen.at(static_cast<std::size_t>(a)) = true;
  for (int a : b.splitting.unstable_axes) {
    if (seen.at(static_cast<std::size_t>(a)))
      throw std::invalid_argument("axis listed twice in splitting of " + b.id);
    seen[static_cast<std::size_t>(a)] = true;
  }
  for (bool s : seen)
    if (!s) throw std::invalid_argument("splitting of " + b.id + " does not cover all axes");
  const auto s = static_cast<Eigen::Index>(b.splitting.stable_axes.size());
  const auto u = static_cast<Eigen::Index>(b.splitting.unstable_axes.size());
  if (b.A.rows() != s || b.A.cols() != s || b.B.rows() != u || b.B.cols() != u)
    throw std::invalid_argument("matrix dimensions do not match splitting of " + b.id);
}

}  // namespace

std::vector<BlockCheck> verify_block_form_nd(const AtlasND& atlas, const PiecewiseAffineMapND& map,
                                             double tol) {
  std::vector<BlockCheck> out;
  for (const auto& block : atlas.blocks) {
    check_splitting(block, map.dimension());
    BlockCheck bc;
    bc.block_id = block.id;

    double na = spectral_norm_upper(block.A);
    double nbinv = 0;
    bool b_invertible = true;
    if (block.B.size() > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(block.B);
      if (!lu.isInvertible()) {
        b_invertible = false;
      } else {
        nbinv = spectral_norm_upper(lu.inverse());
      }
    }
    bc.norm_ok = b_invertible && na <= atlas.lambda + tol && nbinv <= atlas.lambda + tol;
    {
      std::ostringstream os;
      os << "|A| <= " << na << ", |B^-1| <= " << nbinv << " (tol " << tol << ")";
      if (!b_invertible) os << ", B singular";
      bc.norm_detail = os.str();
    }

    bc.affine_ok = true;
    for (const auto& cell : map.cells()) {
      if (!cell.cell.interior_overlaps(block.region)) continue;
      const auto& s = block.splitting.stable_axes;
      const auto& u = block.splitting.unstable_axes;
      auto entry = [&](int i, int j) { return cell.matrix(i, j); };
      double err = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
          err = std::max(err, std::abs(entry(s[i], s[j]) - block.A(static_cast<Eigen::Index>(i),
                                                                  static_cast<Eigen::Index>(j))));
      for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < u.size(); ++j)
          err = std::max(err, std::abs(entry(u[i], u[j]) - block.B(static_cast<Eigen::Index>(i),
                                                                   static_cast<Eigen::Index>(j))));
      for (int si : s)
        for (int uj : u) {
          err = std::max(err, std::abs(entry(si, uj)));
          err = std::max(err, std::abs(entry(uj, si)));
        }
      if (err > tol) {
        bc.affine_ok = false;
        std::ostringstream os;
        os << "cell deviates from block-diagonal form by " << err << "; ";
        bc.affine_detail += os.str();
      }
    }
    if (bc.affine_ok) bc.affine_detail = "cells block-diagonal within tolerance";
    out.push_back(std::move(bc));
  }
  return out;
}

DiskND map_disk_nd(const BlockND& block, double lambda, const DiskND& disk,
                   const PointND& image_anchor) {
  if (disk.block_id != block.id)
    throw PreconditionViolated("disk belongs to block " + disk.block_id);
  const double delta = std::max(disk.d1, disk.d2);
  auto h = block.region.shrink(delta);
  if (!h || !h->contains(disk.anchor))
    throw PreconditionViolated("anchor not in H_l(max(d1,d2))");
  if (!block.region.contains(image_anchor))
    throw PreconditionViolated("image anchor leaves the block");
  DiskND out;
  out.block_id = block.id;
  out.anchor = image_anchor;
  out.d1 = disk.d1 / lambda;
  out.d2 = lambda * disk.d2;
  if (block.B.size() > 0) {
    Eigen::MatrixXd binv = block.B.inverse();
    out.C = block.A * disk.C * binv;
  } else {
    out.C = Eigen::MatrixXd(disk.C.rows(), 0);
  }
  out.c = block.A * disk.c;
  return out;
}

}  // namespace lipshadow
