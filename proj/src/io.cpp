#include "lipshadow/io.hpp"

#include <fstream>
#include <sstream>

#include "lipshadow/errors.hpp"

namespace lipshadow {

namespace {

Rational jrat(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw ParseError("expected a rational string, got " + j.dump());
}

Json jstr(const Rational& x) { return rational_str(x); }

Interval jinterval(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("expected [lo, hi], got " + j.dump());
  return Interval(jrat(j[0]), jrat(j[1]));
}

Json interval_json(const Interval& iv) { return Json::array({jstr(iv.lo), jstr(iv.hi)}); }

}  // namespace

Json map_to_json(const PiecewiseAffineMap1D& map) {
  Json j;
  j["domain"] = interval_json(map.domain());
  j["pieces"] = Json::array();
  for (const auto& p : map.pieces())
    j["pieces"].push_back(Json{{"dom", interval_json(p.domain)},
                               {"slope", jstr(p.slope)},
                               {"intercept", jstr(p.intercept)}});
  return j;
}

PiecewiseAffineMap1D map_from_json(const Json& j) {
  try {
    Interval domain = jinterval(j.at("domain"));
    std::vector<AffinePiece1D> pieces;
    for (const auto& pj : j.at("pieces"))
      pieces.push_back(
          AffinePiece1D{jinterval(pj.at("dom")), jrat(pj.at("slope")), jrat(pj.at("intercept"))});
    return PiecewiseAffineMap1D(std::move(domain), std::move(pieces));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed map file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid map: ") + e.what());
  }
}

Json atlas_to_json(const HyperbolicAtlas1D& atlas, const ShadowingConstants& c) {
  Json j;
  j["blocks"] = Json::array();
  for (const auto& b : atlas.blocks) {
    Json bj;
    bj["id"] = b.id;
    bj["region"] = interval_json(b.region);
    if (b.kind == BlockKind::Stable) {
      bj["stable_axes"] = Json::array({0});
      bj["unstable_axes"] = Json::array();
      bj["A"] = Json::array({Json::array({jstr(b.rate)})});
      bj["B"] = Json::array();
    } else {
      bj["stable_axes"] = Json::array();
      bj["unstable_axes"] = Json::array({0});
      bj["A"] = Json::array();
      bj["B"] = Json::array({Json::array({jstr(b.rate)})});
    }
    j["blocks"].push_back(std::move(bj));
  }
  j["constants"] = Json{{"lambda", jstr(c.lambda)},
                        {"L0", jstr(c.L0)},
                        {"K", jstr(c.K)},
                        {"d0", jstr(c.d0)}};
  return j;
}

std::pair<HyperbolicAtlas1D, ShadowingConstants> atlas_from_json(const Json& j) {
  try {
    const Json& cj = j.at("constants");
    ShadowingConstants c = derive_constants(jrat(cj.at("lambda")), jrat(cj.at("L0")),
                                            jrat(cj.at("K")), jrat(cj.at("d0")));
    HyperbolicAtlas1D atlas;
    atlas.lambda = c.lambda;
    for (const auto& bj : j.at("blocks")) {
      Block1D b;
      b.id = bj.at("id").get<std::string>();
      b.region = jinterval(bj.at("region"));
      const auto& stable = bj.at("stable_axes");
      const auto& unstable = bj.at("unstable_axes");
      if (stable.size() + unstable.size() != 1)
        throw ParseError("1D block " + b.id + " must have exactly one axis");
      if (stable.size() == 1) {
        b.kind = BlockKind::Stable;
        b.rate = jrat(bj.at("A").at(0).at(0));
      } else {
        b.kind = BlockKind::Unstable;
        b.rate = jrat(bj.at("B").at(0).at(0));
      }
      atlas.blocks.push_back(std::move(b));
    }
    if (atlas.blocks.empty()) throw ParseError("atlas has no blocks");
    return {std::move(atlas), std::move(c)};
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed atlas file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid atlas: ") + e.what());
  }
}

std::vector<Rational> traj_points_from_csv(std::istream& in) {
  std::vector<Rational> points;
  std::string line;
  long expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("trajectory row without comma: " + line);
    const std::string key = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (key == "k" || key == "#k") continue;  // header
    long k = 0;
    try {
      k = std::stol(key);
    } catch (...) {
      throw ParseError("bad index in trajectory row: " + line);
    }
    if (k != expected) throw ParseError("trajectory rows must be consecutive from 0");
    ++expected;
    points.push_back(parse_rational(value));
  }
  if (points.empty()) throw ParseError("empty trajectory file");
  return points;
}

void traj_points_to_csv(std::ostream& out, const std::vector<Rational>& points) {
  out << "k,x\n";
  for (std::size_t k = 0; k < points.size(); ++k)
    out << k << "," << rational_str(points[k]) << "\n";
}

Json shadow_result_to_json(const ShadowResult& result) {
  Json j;
  j["z"] = jstr(result.z);
  j["bound"] = jstr(result.bound_claimed);
  j["max_error"] = jstr(result.max_error());
  j["per_step_errors"] = Json::array();
  for (const auto& e : result.per_step_errors) j["per_step_errors"].push_back(jstr(e));
  Json cert;
  cert["branch"] = result.certificate.branch;
  cert["itinerary"] = Json::array();
  for (const auto& seg : result.certificate.itinerary.segments)
    cert["itinerary"].push_back(Json{{"block", seg.block_id}, {"m", seg.m}, {"n", seg.n}});
  cert["y_points"] = Json::array();
  for (const auto& y : result.certificate.y_points) cert["y_points"].push_back(jstr(y));
  cert["survivors"] = Json::array();
  for (const auto& s : result.certificate.survivors)
    cert["survivors"].push_back(interval_json(s));
  j["certificate"] = std::move(cert);
  return j;
}

Json oracle_result_to_json(const OracleResult& result) {
  Json j;
  j["z_star"] = jstr(result.z_star);
  j["rho_star"] = jstr(result.rho_star);
  j["method"] = oracle_method_name(result.method);
  j["evaluations"] = result.evaluations;
  if (result.bracket_halfwidth) j["bracket_halfwidth"] = jstr(*result.bracket_halfwidth);
  return j;
}

Json certificate_report_to_json(const CertificateReport& report) {
  Json j;
  j["pass"] = report.pass;
  j["blocks"] = Json::array();
  for (const auto& b : report.blocks)
    j["blocks"].push_back(Json{{"block", b.block_id},
                               {"norm_ok", b.norm_ok},
                               {"norm", b.norm_detail},
                               {"affine_ok", b.affine_ok},
                               {"affine", b.affine_detail}});
  j["condition2"] = Json::array();
  for (const auto& p : report.condition2) {
    Json pj{{"from", p.from},   {"to", p.to},     {"d", jstr(p.d)},
            {"feasible", p.feasible}, {"pass", p.pass}, {"detail", p.detail}};
    if (p.feasible) {
      pj["min_margin"] = jstr(p.min_margin);
      pj["witness_p"] = jstr(p.witness_p);
    }
    j["condition2"].push_back(std::move(pj));
  }
  if (!report.notes.empty()) j["notes"] = report.notes;
  return j;
}

Json sweep_result_to_json(const SweepResult& sweep) {
  Json j;
  j["overall_max_ratio"] = jstr(sweep.overall_max_ratio);
  j["flagged"] = sweep.flagged;
  if (sweep.bound) j["bound"] = jstr(*sweep.bound);
  j["per_d"] = Json::array();
  for (const auto& st : sweep.per_d)
    j["per_d"].push_back(Json{{"d", jstr(st.d)},
                              {"trials", st.trials},
                              {"max_ratio", jstr(st.max_ratio)},
                              {"mean_ratio", jstr(st.mean_ratio)},
                              {"median_ratio", jstr(st.median_ratio)}});
  return j;
}

void sweep_rows_to_csv(std::ostream& out, const SweepResult& sweep) {
  out << "d,trial,kind,rho_star,ratio,method,flagged\n";
  for (const auto& r : sweep.rows)
    out << rational_str(r.d) << "," << r.trial << "," << r.kind << "," << rational_str(r.rho)
        << "," << rational_str(r.ratio) << "," << oracle_method_name(r.method) << ","
        << (r.flagged ? 1 : 0) << "\n";
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ParseError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace lipshadow
