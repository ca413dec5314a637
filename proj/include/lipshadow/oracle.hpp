#pragma once

#include <cstdint>
#include <optional>

#include "lipshadow/example.hpp"
#include "lipshadow/pam.hpp"
#include "lipshadow/pseudotrajectory.hpp"

namespace lipshadow {

enum class OracleMethod { ExactBreakpoints, ExactMonotone, GridRefine };

std::string oracle_method_name(OracleMethod m);

// Ground truth for E(z) = max_k |f^k(z) - x_k| over a search interval.
struct OracleResult {
  Rational z_star;
  Rational rho_star;
  OracleMethod method = OracleMethod::ExactBreakpoints;
  std::uint64_t evaluations = 0;
  // grid_refine only: rho_star is within this of the true optimum.
  std::optional<Rational> bracket_halfwidth;
};

// Exact global minimax over the search interval. Builds the iterated maps by
// composition under the piece budget, evaluates the error envelope at its
// breakpoints and interior minima; falls back to a certified grid when the
// budget trips on a non-monotone map. Ties resolve to the smallest z.
OracleResult optimal_shadow_distance(const PiecewiseAffineMap1D& map,
                                     const Pseudotrajectory& traj, const Interval& search,
                                     std::size_t piece_cap = 100000);

// Scaled-family variant: materializes the orbit hull when it avoids the
// accumulation point, otherwise runs the exact monotone bisection.
OracleResult optimal_shadow_distance(const ScaledFamily& f, const Pseudotrajectory& traj,
                                     const Interval& search, std::size_t piece_cap = 100000);

// Default search window N(LL * d, x_0); a shadowing point is guaranteed there.
Interval default_search(const Pseudotrajectory& traj, const ShadowingConstants& c);

// ---------------------------------------------------------------------------
// Empirical Lipschitz sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  Rational d;
  long trial = 0;
  std::string kind;
  Rational rho;
  Rational ratio;  // rho / d, 0 when d == 0 (excluded from the sup)
  OracleMethod method = OracleMethod::ExactBreakpoints;
  bool flagged = false;
};

struct SweepStats {
  Rational d;
  long trials = 0;
  Rational max_ratio;
  Rational mean_ratio;
  Rational median_ratio;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepStats> per_d;
  Rational overall_max_ratio;
  long flagged = 0;
  std::optional<Rational> bound;
};

// rho*/d distribution over generated trials at each d in the sweep; trials
// alternate between perturbed and crossing designs of the reference map.
SweepResult empirical_lipschitz_constant(const ExampleF0& ex, long trials_per_d,
                                         const std::vector<Rational>& d_values,
                                         std::optional<Rational> flag_bound, std::uint64_t seed,
                                         int jobs = 1);

}  // namespace lipshadow
