#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/io.hpp"

using namespace lipshadow;

namespace {

Rational rr(const char* s) { return parse_rational(s); }

std::string tmp_dir() {
  const char* t = std::getenv("LIPSHADOW_TMP");
  return t ? std::string(t) : std::string("/tmp");
}

std::string bin_path() {
  const char* b = std::getenv("LIPSHADOW_BIN");
  return b ? std::string(b) : std::string();
}

int run_cli(const std::string& args, const std::string& out_file) {
  const int rc = std::system((bin_path() + " " + args + " > " + out_file + " 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trajectory CSV round trip") {
  std::vector<Rational> pts{rr("-1/3"), rr("2/3"), rr("5/6")};
  std::stringstream ss;
  traj_points_to_csv(ss, pts);
  CHECK(traj_points_from_csv(ss) == pts);

  // Decimal values parse exactly.
  std::stringstream dec("k,x\n0,0.25\n1,2.5e-1\n");
  auto parsed = traj_points_from_csv(dec);
  CHECK(parsed == std::vector<Rational>{rr("1/4"), rr("1/4")});

  std::stringstream bad("k,x\n0,1/2\n2,1/3\n");
  CHECK_THROWS_AS(traj_points_from_csv(bad), ParseError);
}

TEST_CASE("atlas JSON round trip") {
  const ExampleF0 ex = build_f0();
  Json j = atlas_to_json(ex.atlas, ex.constants);
  auto [atlas, constants] = atlas_from_json(j);
  REQUIRE(atlas.blocks.size() == 2);
  CHECK(atlas.blocks[0].id == "G0");
  CHECK(atlas.blocks[0].kind == BlockKind::Unstable);
  CHECK(atlas.blocks[0].rate == 2);
  CHECK(atlas.blocks[1].kind == BlockKind::Stable);
  CHECK(atlas.blocks[1].rate == rr("1/2"));
  CHECK(atlas.blocks[1].region == Interval(rr("1/3"), rr("29/24")));
  CHECK(constants.K == 26);
  CHECK(constants.LL == 109);
  CHECK_THROWS_AS(atlas_from_json(Json{{"blocks", Json::array()}}), ParseError);
}

TEST_CASE("shadow result serialization") {
  const ExampleF0 ex = build_f0();
  GenOutput cr = gen_crossing(ex, pow2(-14), 8, 8, 4);
  ShadowResult res = trichotomy_shadow(ex, cr.traj);
  Json j = shadow_result_to_json(res);
  CHECK(j["z"] == rational_str(res.z));
  CHECK(j["bound"] == rational_str(res.bound_claimed));
  CHECK(j["per_step_errors"].size() == res.per_step_errors.size());
  CHECK(j["certificate"]["branch"] == "case3");
  CHECK(j["certificate"]["itinerary"].size() == 2);
  CHECK(j["certificate"]["survivors"].size() == res.certificate.survivors.size());
}

TEST_CASE("cli: verify-atlas exit codes") {
  if (bin_path().empty()) return;  // library-only build
  const std::string dir = tmp_dir();

  CHECK(run_cli("verify-atlas --map f0", dir + "/va.json") == 0);

  // Identity map against a hyperbolic atlas: certification fails (exit 1).
  Json id_map{{"domain", {"0", "1"}},
              {"pieces", Json::array({Json{{"dom", {"0", "1"}}, {"slope", "1"}, {"intercept", "0"}}})}};
  save_json_file(dir + "/id_map.json", id_map);
  Json id_atlas{
      {"blocks", Json::array({Json{{"id", "B"},
                                   {"region", {"0", "1"}},
                                   {"stable_axes", Json::array()},
                                   {"unstable_axes", Json::array({0})},
                                   {"A", Json::array()},
                                   {"B", Json::array({Json::array({"1"})})}}})},
      {"constants", Json{{"lambda", "1/2"}, {"L0", "2"}, {"K", "26"}, {"d0", "1/1024"}}}};
  save_json_file(dir + "/id_atlas.json", id_atlas);
  CHECK(run_cli("verify-atlas --map " + dir + "/id_map.json --atlas " + dir + "/id_atlas.json",
                dir + "/va_id.json") == 1);

  // Truncated JSON: usage error (exit 2).
  std::ofstream(dir + "/broken.json") << "{\"domain\": [";
  CHECK(run_cli("verify-atlas --map " + dir + "/broken.json --atlas " + dir + "/id_atlas.json",
                dir + "/va_broken.json") == 2);
}

TEST_CASE("cli: generate, shadow, oracle pipeline") {
  if (bin_path().empty()) return;
  const std::string dir = tmp_dir();

  CHECK(run_cli("generate --map f0 --kind crossing --d 1/8192 --lead 10 --tail 10 --seed 5 "
                "--out " + dir + "/cross.csv",
                dir + "/gen.log") == 0);
  CHECK(run_cli("shadow --map f0 --traj " + dir + "/cross.csv --json --out " + dir +
                    "/shadow.json --steps-out " + dir + "/steps.csv",
                dir + "/shadow.log") == 0);
  Json rep = load_json_file(dir + "/shadow.json");
  CHECK(rep["result"]["certificate"]["branch"] == "case3");
  const Rational bound = parse_rational(rep["result"]["bound"].get<std::string>());
  const Rational maxerr = parse_rational(rep["result"]["max_error"].get<std::string>());
  CHECK(maxerr <= bound);

  CHECK(run_cli("oracle --map f0 --traj " + dir + "/cross.csv --json --out " + dir +
                    "/oracle.json",
                dir + "/oracle.log") == 0);
  Json orc = load_json_file(dir + "/oracle.json");
  CHECK(parse_rational(orc["result"]["rho_star"].get<std::string>()) <= maxerr);
  CHECK(orc["result"]["method"] == "exact_breakpoints");

  // Determinism: identical invocations produce byte-identical result payloads.
  CHECK(run_cli("shadow --map f0 --traj " + dir + "/cross.csv --json --out " + dir +
                    "/shadow2.json",
                dir + "/shadow2.log") == 0);
  CHECK(load_json_file(dir + "/shadow.json")["result"] ==
        load_json_file(dir + "/shadow2.json")["result"]);

  // A trajectory with a hopeless defect reports a machine-readable cause.
  std::ofstream(dir + "/bad.csv") << "k,x\n0,0\n1,1/2\n";
  CHECK(run_cli("shadow --map f0 --traj " + dir + "/bad.csv", dir + "/bad.log") == 1);
  CHECK(slurp(dir + "/bad.log").find("DTooLarge") != std::string::npos);
}

TEST_CASE("cli: scaled family and reproduction harness") {
  if (bin_path().empty()) return;
  const std::string dir = tmp_dir();

  // Constant trajectory at the fixed point 1/8 shadows through a segment.
  std::ofstream(dir + "/fixed.csv") << "k,x\n0,1/8\n1,1/8\n2,1/8\n3,1/8\n4,1/8\n5,1/8\n";
  CHECK(run_cli("shadow --map f --traj " + dir + "/fixed.csv --json --out " + dir + "/t2.json",
                dir + "/t2.log") == 0);
  Json t2 = load_json_file(dir + "/t2.json");
  CHECK(t2["result"]["z"] == "1/8");
  CHECK(t2["result"]["max_error"] == "0");

  // Single criteria run through the CLI harness, plus the corruption
  // self-test which must fail that row.
  CHECK(run_cli("reproduce-paper --only 2", dir + "/rp2.log") == 0);
  CHECK(slurp(dir + "/rp2.log").find("PASS") != std::string::npos);
  CHECK(run_cli("reproduce-paper --only 2 --self-test-corrupt K", dir + "/rp2c.log") == 1);
  CHECK(slurp(dir + "/rp2c.log").find("FAIL") != std::string::npos);

  // Small sweep with the hyperbolic bound: nothing flagged.
  CHECK(run_cli("sweep --trials 4 --d-sweep 1/1024,1/16384 --bound 109 --seed 3 --out " + dir +
                    "/sweep.csv",
                dir + "/sweep.log") == 0);
  CHECK(slurp(dir + "/sweep.csv").find("d,trial,kind") != std::string::npos);
}
