#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>

#include "lipshadow/hyperbolic.hpp"
#include "lipshadow/oracle.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/pseudotrajectory.hpp"
#include "lipshadow/shadow.hpp"

namespace lipshadow {

using Json = nlohmann::ordered_json;

// Map files: {"domain":[lo,hi],"pieces":[{"dom":[a,b],"slope":"p/q",
// "intercept":"p/q"},...]} with rationals as strings.
Json map_to_json(const PiecewiseAffineMap1D& map);
PiecewiseAffineMap1D map_from_json(const Json& j);

// Atlas files: blocks with region, stable/unstable axis lists and 1x1
// rational matrices; constants block {lambda, L0, K, d0}.
Json atlas_to_json(const HyperbolicAtlas1D& atlas, const ShadowingConstants& c);
std::pair<HyperbolicAtlas1D, ShadowingConstants> atlas_from_json(const Json& j);

// Pseudotrajectory CSV: "k,x" rows, rationals "p/q" or decimals.
std::vector<Rational> traj_points_from_csv(std::istream& in);
void traj_points_to_csv(std::ostream& out, const std::vector<Rational>& points);

Json shadow_result_to_json(const ShadowResult& result);
Json oracle_result_to_json(const OracleResult& result);
Json certificate_report_to_json(const CertificateReport& report);
Json sweep_result_to_json(const SweepResult& sweep);
void sweep_rows_to_csv(std::ostream& out, const SweepResult& sweep);

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

}  // namespace lipshadow
