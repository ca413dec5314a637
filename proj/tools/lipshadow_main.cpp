// Command-line workbench for constructive Lipschitz shadowing of
// piecewise-affine interval maps: atlas certification, shadowing runs,
// minimax oracles, trajectory generation, and the bundled reference-example
// reproduction suite.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "lipshadow/acceptance.hpp"
#include "lipshadow/errors.hpp"
#include "lipshadow/example.hpp"
#include "lipshadow/generators.hpp"
#include "lipshadow/io.hpp"
#include "lipshadow/oracle.hpp"

namespace ls = lipshadow;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitClaimFailure = 1;
constexpr int kExitUsage = 2;

struct MapChoice {
  std::string name = "f0";  // f0 | f | <path to map JSON>
};

ls::ExampleF0& bundled_f0() {
  static ls::ExampleF0 ex = ls::build_f0();
  return ex;
}

ls::ScaledFamily& bundled_family() {
  static ls::ScaledFamily fam;
  return fam;
}

ls::PiecewiseAffineMap1D load_map(const MapChoice& choice) {
  if (choice.name == "f0") return bundled_f0().map;
  if (choice.name == "f")
    throw ls::ParseError("the scaled family has no finite piece list; this command needs f0 or a map file");
  return ls::map_from_json(ls::load_json_file(choice.name));
}

ls::Pseudotrajectory load_traj(const std::string& path, const MapChoice& map_choice) {
  std::ifstream in(path);
  if (!in) throw ls::ParseError("cannot open trajectory file " + path);
  auto points = ls::traj_points_from_csv(in);
  if (map_choice.name == "f")
    return ls::measure_defect(bundled_family().ref(), std::move(points));
  return ls::measure_defect(load_map(map_choice), std::move(points));
}

void emit(const ls::Json& payload, const std::string& out_path, bool to_stdout) {
  ls::Json wrapped;
  wrapped["meta"] = ls::Json{{"tool", "lipshadow"},
                             {"timestamp", static_cast<long>(::time(nullptr))}};
  wrapped["result"] = payload;
  if (!out_path.empty()) ls::save_json_file(out_path, wrapped);
  if (to_stdout || out_path.empty()) std::cout << payload.dump(2) << "\n";
}

int cmd_verify_atlas(const std::string& map_name, const std::string& atlas_path,
                     const std::string& d_arg, const std::string& out_path, bool json_out) {
  ls::PiecewiseAffineMap1D map = load_map(MapChoice{map_name});
  ls::HyperbolicAtlas1D atlas;
  ls::ShadowingConstants constants;
  if (atlas_path.empty()) {
    if (map_name != "f0") throw ls::ParseError("--atlas is required for custom maps");
    atlas = bundled_f0().atlas;
    constants = bundled_f0().constants;
  } else {
    auto loaded = ls::atlas_from_json(ls::load_json_file(atlas_path));
    atlas = std::move(loaded.first);
    constants = std::move(loaded.second);
  }

  ls::CertificateReport report = ls::verify_block_form(atlas, map);
  // Universal transition check over a geometric sweep of d values.
  std::vector<ls::Rational> dsweep;
  if (!d_arg.empty()) {
    dsweep.push_back(ls::parse_rational(d_arg));
  } else {
    for (int k = 0; k < 6; ++k) dsweep.push_back(constants.d0 / ls::pow2(k));
  }
  if (map.strictly_increasing()) {
    for (const auto& d : dsweep) {
      auto checks = ls::verify_transitions_universal(map, atlas, constants, d);
      for (auto& pc : checks) {
        report.pass = report.pass && pc.pass;
        report.condition2.push_back(std::move(pc));
      }
    }
  } else {
    report.notes += "condition-2 universal check skipped (map not strictly increasing); ";
  }

  emit(ls::certificate_report_to_json(report), out_path, json_out);
  return report.pass ? kExitPass : kExitClaimFailure;
}

int cmd_shadow(const std::string& map_name, const std::string& traj_path,
               const std::string& mode, const std::string& itinerary_path,
               const std::string& atlas_path, const std::string& out_path,
               const std::string& steps_path, bool json_out) {
  ls::Pseudotrajectory traj = load_traj(traj_path, MapChoice{map_name});
  ls::ShadowResult result;
  if (map_name == "f") {
    result = ls::family_shadow(bundled_family(), bundled_f0(), traj);
  } else if (map_name == "f0" && (mode == "auto" || mode == "lemma4")) {
    result = ls::trichotomy_shadow(bundled_f0(), traj);
  } else {
    // Gluing run with an explicit or auto-discovered itinerary.
    ls::PiecewiseAffineMap1D map = load_map(MapChoice{map_name});
    ls::HyperbolicAtlas1D atlas;
    ls::ShadowingConstants constants;
    if (atlas_path.empty()) {
      if (map_name != "f0") throw ls::ParseError("custom maps need --atlas");
      atlas = bundled_f0().atlas;
      constants = bundled_f0().constants;
    } else {
      auto loaded = ls::atlas_from_json(ls::load_json_file(atlas_path));
      atlas = std::move(loaded.first);
      constants = std::move(loaded.second);
    }
    ls::BlockItinerary itinerary;
    if (itinerary_path.empty()) {
      itinerary = ls::find_itinerary(traj, atlas, constants);
    } else {
      ls::Json ij = ls::load_json_file(itinerary_path);
      for (const auto& sj : ij.at("segments"))
        itinerary.segments.push_back(ls::ItinerarySegment{sj.at("block").get<std::string>(),
                                                          sj.at("m").get<long>(),
                                                          sj.at("n").get<long>()});
    }
    result = ls::itinerary_shadow(map, atlas, constants, traj, itinerary);
  }
  if (!steps_path.empty()) {
    std::ofstream steps(steps_path);
    steps << "k,x,error\n";
    for (std::size_t k = 0; k < traj.points.size(); ++k)
      steps << k << "," << ls::rational_str(traj.points[k]) << ","
            << ls::rational_str(result.per_step_errors[k]) << "\n";
  }
  emit(ls::shadow_result_to_json(result), out_path, json_out);
  return kExitPass;
}

int cmd_oracle(const std::string& map_name, const std::string& traj_path,
               const std::string& search_lo, const std::string& search_hi,
               std::size_t piece_cap, const std::string& out_path, bool json_out) {
  ls::Pseudotrajectory traj = load_traj(traj_path, MapChoice{map_name});
  ls::OracleResult result;
  const bool have_search = !search_lo.empty() && !search_hi.empty();
  if (map_name == "f") {
    ls::Interval search = have_search ? ls::Interval(ls::parse_rational(search_lo),
                                                     ls::parse_rational(search_hi))
                                      : *ls::default_search(traj, bundled_f0().constants)
                                             .intersect(bundled_family().domain());
    result = ls::optimal_shadow_distance(bundled_family(), traj, search, piece_cap);
  } else {
    ls::PiecewiseAffineMap1D map = load_map(MapChoice{map_name});
    ls::Interval search = have_search
                              ? ls::Interval(ls::parse_rational(search_lo),
                                             ls::parse_rational(search_hi))
                              : *ls::default_search(traj, bundled_f0().constants)
                                     .intersect(map.domain());
    result = ls::optimal_shadow_distance(map, traj, search, piece_cap);
  }
  emit(ls::oracle_result_to_json(result), out_path, json_out);
  return kExitPass;
}

ls::GenSpec::Kind parse_kind(const std::string& kind) {
  if (kind == "perturbed") return ls::GenSpec::Kind::Perturbed;
  if (kind == "crossing") return ls::GenSpec::Kind::Crossing;
  if (kind == "adversarial_drift") return ls::GenSpec::Kind::AdversarialDrift;
  if (kind == "constant") return ls::GenSpec::Kind::Constant;
  throw ls::ParseError("unknown generator kind " + kind);
}

void write_generated(const ls::GenOutput& gen, const std::string& kind, std::uint64_t seed,
                     const std::string& out_path) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw ls::ParseError("cannot write " + out_path);
    out = &file;
  }
  ls::traj_points_to_csv(*out, gen.traj.points);
  if (!out_path.empty()) {
    ls::Json meta{{"kind", kind},
                  {"defect", ls::rational_str(gen.traj.defect)},
                  {"clipped", gen.clipped},
                  {"clip_count", gen.clip_count},
                  {"seed", seed}};
    ls::save_json_file(out_path + ".meta.json", meta);
  }
}

int cmd_generate(const std::string& map_name, const std::string& kind, const std::string& x0,
                 long T, const std::string& d_arg, std::uint64_t seed, long lead, long tail,
                 const std::string& batch_path, const std::string& out_path) {
  std::optional<ls::PiecewiseAffineMap1D> custom;
  ls::MapRef ref;
  if (map_name == "f") {
    ref = bundled_family().ref();
  } else if (map_name == "f0") {
    ref = ls::map_ref(bundled_f0().map);
  } else {
    custom = load_map(MapChoice{map_name});
    ref = ls::map_ref(*custom);
  }

  if (!batch_path.empty()) {
    const ls::Json batch = ls::load_json_file(batch_path);
    if (!batch.is_array()) throw ls::ParseError("batch file must hold an array of specs");
    long index = 0;
    for (const auto& sj : batch) {
      ls::GenSpec spec;
      spec.kind = parse_kind(sj.value("kind", std::string("perturbed")));
      if (sj.contains("x0")) spec.x0 = ls::parse_rational(sj.at("x0").get<std::string>());
      spec.T = sj.value("T", 50L);
      if (sj.contains("d")) spec.d_target = ls::parse_rational(sj.at("d").get<std::string>());
      spec.seed = sj.value("seed", 0ULL);
      spec.lead = sj.value("lead", 10L);
      spec.tail = sj.value("tail", 10L);
      ls::GenOutput gen = ls::generate(ref, bundled_f0(), spec);
      const std::string path = sj.contains("out")
                                   ? sj.at("out").get<std::string>()
                                   : out_path + "-" + std::to_string(index) + ".csv";
      if (out_path.empty() && !sj.contains("out"))
        throw ls::ParseError("batch mode needs --out or per-spec \"out\" paths");
      write_generated(gen, sj.value("kind", std::string("perturbed")), spec.seed, path);
      ++index;
    }
    return kExitPass;
  }

  ls::GenSpec spec;
  spec.kind = parse_kind(kind);
  spec.x0 = x0.empty() ? ls::Rational(0) : ls::parse_rational(x0);
  spec.T = T;
  spec.d_target = d_arg.empty() ? ls::Rational(0) : ls::parse_rational(d_arg);
  spec.seed = seed;
  spec.lead = lead;
  spec.tail = tail;
  ls::GenOutput gen = ls::generate(ref, bundled_f0(), spec);
  write_generated(gen, kind, seed, out_path);
  return kExitPass;
}

int cmd_sweep(long trials, const std::string& d_list, const std::string& bound_arg,
              std::uint64_t seed, int jobs, const std::string& out_path, bool json_out) {
  std::vector<ls::Rational> ds;
  std::stringstream ss(d_list);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) ds.push_back(ls::parse_rational(tok));
  if (ds.empty())
    for (int e = 10; e <= 20; e += 2) ds.push_back(ls::pow2(-e));
  std::optional<ls::Rational> bound;
  if (!bound_arg.empty()) bound = ls::parse_rational(bound_arg);
  ls::SweepResult sweep =
      ls::empirical_lipschitz_constant(bundled_f0(), trials, ds, bound, seed, jobs);
  if (!out_path.empty()) {
    std::ofstream csv(out_path);
    ls::sweep_rows_to_csv(csv, sweep);
  }
  emit(ls::sweep_result_to_json(sweep), out_path.empty() ? "" : out_path + ".summary.json",
       json_out || out_path.empty());
  return sweep.flagged == 0 ? kExitPass : kExitClaimFailure;
}

int cmd_reproduce(std::uint64_t seed, int jobs, int only, const std::string& corrupt,
                  const std::string& out_path, bool json_out) {
  ls::AcceptanceOptions options;
  options.seed = seed;
  options.jobs = jobs;
  if (only > 0) options.only_item = only;
  options.corrupt = corrupt;
  ls::AcceptanceReport report = ls::run_acceptance(options);
  if (json_out || !out_path.empty())
    emit(ls::acceptance_to_json(report), out_path, json_out);
  if (!json_out) ls::print_acceptance(std::cout, report, true);
  return report.all_pass ? kExitPass : kExitClaimFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constructive Lipschitz shadowing workbench for piecewise-affine interval maps"};
  app.require_subcommand(1);

  std::string map_name = "f0", traj_path, atlas_path, out_path, steps_path, itinerary_path;
  std::string d_arg, search_lo, search_hi, kind = "perturbed", x0, d_list, bound_arg, corrupt;
  std::string batch_path;
  std::string mode = "auto";
  std::uint64_t seed = 1;
  long T = 50, lead = 10, tail = 10, trials = 100;
  int jobs = 1, only = 0;
  std::size_t piece_cap = 100000;
  bool json_out = false;

  auto* verify = app.add_subcommand("verify-atlas", "certify the hyperbolic block conditions");
  verify->add_option("--map", map_name, "f0 or a map JSON path");
  verify->add_option("--atlas", atlas_path, "atlas JSON (defaults to the bundled one for f0)");
  verify->add_option("--d", d_arg, "single d for the transition check (default: sweep below d0)");
  verify->add_option("--out", out_path);
  verify->add_flag("--json", json_out);

  auto* shadow = app.add_subcommand("shadow", "construct a shadowing orbit for a trajectory file");
  shadow->add_option("--map", map_name, "f0 | f | map JSON path");
  shadow->add_option("--traj", traj_path)->required();
  shadow->add_option("--mode", mode, "auto | lemma4 | theorem1");
  shadow->add_option("--itinerary", itinerary_path,
                     "segments JSON for mode theorem1 (auto-discovered when omitted)");
  shadow->add_option("--atlas", atlas_path, "atlas JSON for custom maps");
  shadow->add_option("--out", out_path);
  shadow->add_option("--steps-out", steps_path, "per-step CSV");
  shadow->add_flag("--json", json_out);

  auto* oracle = app.add_subcommand("oracle", "exact optimal shadowing distance");
  oracle->add_option("--map", map_name);
  oracle->add_option("--traj", traj_path)->required();
  oracle->add_option("--search-lo", search_lo);
  oracle->add_option("--search-hi", search_hi);
  oracle->add_option("--piece-cap", piece_cap);
  oracle->add_option("--out", out_path);
  oracle->add_flag("--json", json_out);

  auto* generate = app.add_subcommand("generate", "emit a pseudotrajectory CSV");
  generate->add_option("--map", map_name);
  generate->add_option("--kind", kind, "perturbed | crossing | adversarial_drift | constant");
  generate->add_option("--x0", x0);
  generate->add_option("--T", T);
  generate->add_option("--d", d_arg, "target defect (rational)");
  generate->add_option("--seed", seed);
  generate->add_option("--lead", lead);
  generate->add_option("--tail", tail);
  generate->add_option("--batch", batch_path, "JSON array of generator specs");
  generate->add_option("--out", out_path);

  auto* sweep = app.add_subcommand("sweep", "empirical shadowing-constant sweep");
  sweep->add_option("--trials", trials, "trials per d");
  sweep->add_option("--d-sweep", d_list, "comma-separated d values");
  sweep->add_option("--bound", bound_arg, "flag ratios above this bound");
  sweep->add_option("--seed", seed);
  sweep->add_option("--jobs", jobs);
  sweep->add_option("--out", out_path, "CSV path (summary JSON written alongside)");
  sweep->add_flag("--json", json_out);

  auto* repro = app.add_subcommand("reproduce-paper",
                                   "run every bundled reference-example check");
  repro->add_option("--seed", seed);
  repro->add_option("--jobs", jobs);
  repro->add_option("--only", only, "run a single numbered check");
  repro->add_option("--self-test-corrupt", corrupt, "harness self-test: corrupt one constant")
      ->group("");
  repro->add_option("--out", out_path);
  repro->add_flag("--json", json_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (verify->parsed())
      return cmd_verify_atlas(map_name, atlas_path, d_arg, out_path, json_out);
    if (shadow->parsed())
      return cmd_shadow(map_name, traj_path, mode, itinerary_path, atlas_path, out_path,
                        steps_path, json_out);
    if (oracle->parsed())
      return cmd_oracle(map_name, traj_path, search_lo, search_hi, piece_cap, out_path,
                        json_out);
    if (generate->parsed())
      return cmd_generate(map_name, kind, x0, T, d_arg, seed, lead, tail, batch_path,
                          out_path);
    if (sweep->parsed())
      return cmd_sweep(trials, d_list, bound_arg, seed, jobs, out_path, json_out);
    if (repro->parsed())
      return cmd_reproduce(seed, jobs, only, corrupt, out_path, json_out);
  } catch (const ls::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ls::DTooLarge& e) {
    std::cout << ls::Json{{"error", "DTooLarge"}, {"detail", e.what()}}.dump(2) << "\n";
    return kExitClaimFailure;
  } catch (const ls::DTooShort& e) {
    std::cout << ls::Json{{"error", "DTooShort"}, {"detail", e.what()}}.dump(2) << "\n";
    return kExitClaimFailure;
  } catch (const ls::NoItinerary& e) {
    std::cout << ls::Json{{"error", "NoItinerary"}, {"detail", e.what()}, {"index", e.index}}
                     .dump(2)
              << "\n";
    return kExitClaimFailure;
  } catch (const ls::TransitionFailed& e) {
    std::cout << ls::Json{{"error", "TransitionFailed"},
                          {"detail", e.what()},
                          {"segment", e.segment}}
                     .dump(2)
              << "\n";
    return kExitClaimFailure;
  } catch (const ls::PreconditionViolated& e) {
    std::cout << ls::Json{{"error", "PreconditionViolated"}, {"detail", e.what()}}.dump(2)
              << "\n";
    return kExitClaimFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
