#pragma once

#include <cstdint>
#include <random>

#include "lipshadow/pseudotrajectory.hpp"

namespace lipshadow {

struct ExampleF0;

// Deterministic rational noise source: values live on the lattice
// d * j / 2^40 so downstream arithmetic stays exact.
class LatticeRng {
public:
  explicit LatticeRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [-d, d] (lattice-quantized).
  Rational noise(const Rational& d);
  // Uniform lattice point of [range.lo, range.hi].
  Rational uniform(const Interval& range);
  long uniform_int(long lo, long hi);

private:
  std::uint64_t draw_below(std::uint64_t bound);
  std::mt19937_64 engine_;
};

struct GenSpec {
  enum class Kind { Perturbed, Crossing, AdversarialDrift, Constant };
  Kind kind = Kind::Perturbed;
  Rational x0 = 0;
  long T = 1;
  Rational d_target = 0;
  std::uint64_t seed = 0;
  long lead = 0, tail = 0;  // crossing design
};

struct GenOutput {
  Pseudotrajectory traj;
  bool clipped = false;
  long clip_count = 0;
};

// x_{k+1} = f(x_k) + e_k with e_k uniform in [-d, d]; perturbations that
// leave the domain are clamped (recorded in the output flags), which keeps
// the defect within d_target.
GenOutput gen_perturbed(const MapRef& map, const GenSpec& spec);

// Constant sequence at x0 (defect measured, not designed).
GenOutput gen_constant(const MapRef& map, const Rational& x0, long T);

// Greedy worst-case drift: |e_k| = d with the sign that pushes the state
// away from the unperturbed orbit.
GenOutput gen_adversarial_drift(const MapRef& map, const Rational& x0, long T,
                                const Rational& d_target);

// Crossing design for the reference map: `lead` backward-contracted steps
// through the expanding block, a crossing point in [1/4, 5/12] at index
// `lead`, then `tail` forward steps in the contracting block.
GenOutput gen_crossing(const ExampleF0& ex, const Rational& d_target, long lead, long tail,
                       std::uint64_t seed);

// In-block workloads for the Lemma-1 solver: backward-generated inside an
// expanding block, forward inside a contracting one.
GenOutput gen_inblock(const ExampleF0& ex, const std::string& block_id, long T,
                      const Rational& d_target, std::uint64_t seed);

GenOutput generate(const MapRef& map, const ExampleF0& ex, const GenSpec& spec);

}  // namespace lipshadow
