/// @file hamiltonian.hpp
/// @brief Budgeted evaluation of the (infimal) Hamiltonian
///        H(x, p0, p) = inf_u { <p, f(x,u)> + p0·l(x,u) }
///        and of its truncation to U ∩ B(0,N).
///
/// The infimum over an unbounded control set is approximated by a
/// deterministic two-phase search (odd lattice, then projected compass
/// refinement) swept over a growing radius schedule. When the running best
/// falls below the divergence threshold the value is certified "−∞" in the
/// budgeted sense: a concrete control witnessing integrand < threshold is
/// returned. All results are certificates at the returned minimizer — the
/// reported value is the re-evaluated integrand there, never a stale
/// accumulator — so every value can be re-checked by one function call.

#pragma once

#include <cstdint>
#include <optional>

#include "mrf/types.hpp"

namespace mrf {

/// Deterministic search budget. Defaults follow the library convention:
/// 33 lattice points per control dimension (odd, so 0 and the box faces are
/// on the grid), 50 compass sweeps, radius schedule 1,10,100,1000.
struct MinimizeBudget {
  int grid_points = 33;
  int refine_iters = 50;
  std::vector<double> radius_schedule = {1.0, 10.0, 100.0, 1000.0};
  double divergence_threshold = -1e6;
};

/// Result of a budgeted Hamiltonian evaluation.
/// Invariant: integrand(minimizer) == certified_below (re-evaluated, not
/// accumulated), and value == certified_below. When minus_infinity is set the
/// minimizer witnesses integrand < divergence_threshold.
struct HamiltonianValue {
  double value = 0.0;
  bool minus_infinity = false;
  Vec minimizer;
  double certified_below = 0.0;
  /// Points where f or l raised EvalError and were skipped (reported, not
  /// silently ignored; an all-failed stage rethrows).
  int eval_failures = 0;
};

/// Extended result carrying the running best within each schedule radius
/// (used by the verifier to derive feasible-radius tables N̂).
struct HamiltonianProfile {
  HamiltonianValue result;
  std::vector<double> radii;        ///< schedule prefix actually searched
  std::vector<double> best_within;  ///< running best after each radius stage
};

/// Objective for the generic budgeted minimizer. Returning nullopt marks the
/// point as unevaluable (domain error); it is skipped and counted.
using ObjectiveFn = std::function<std::optional<double>(std::span<const double>)>;

/// Certified outcome of a budgeted minimization over U ∩ B(0,N).
struct BudgetedMinimum {
  Vec u;
  double value = 0.0;  ///< re-evaluated objective at u
  int eval_failures = 0;
  std::vector<double> radii;        ///< stage radii actually searched
  std::vector<double> best_within;  ///< running best after each stage
};

/// Deterministic staged minimization of `g` over U ∩ B(0,N): odd lattice plus
/// projected compass refinement per stage, stages taken from the schedule
/// prefix below min(N, bound of U) plus that bound itself. When `stop_below`
/// is set the sweep stops early once the running best drops below it.
/// Throws std::runtime_error if no feasible point could be evaluated.
BudgetedMinimum minimize_budgeted(const ObjectiveFn& g, int m,
                                  const ControlSet& U, double N,
                                  const MinimizeBudget& budget,
                                  std::optional<double> stop_below = std::nullopt);

/// <p, f(x,u)> + p0·l(x,u); propagates EvalError from f or l.
double hamiltonian_integrand(const ControlProblem& problem,
                             std::span<const double> x, double p0,
                             std::span<const double> p,
                             std::span<const double> u);

/// Infimal Hamiltonian over the problem's control set.
/// Bounded U: single search over U. Unbounded U: radius-schedule sweep with
/// the −∞ flag when the best value crosses budget.divergence_threshold.
HamiltonianValue hamiltonian(const ControlProblem& problem,
                             std::span<const double> x, double p0,
                             std::span<const double> p,
                             const MinimizeBudget& budget = {});

/// Same as hamiltonian() but also reports the per-radius running best.
HamiltonianProfile hamiltonian_profile(const ControlProblem& problem,
                                       std::span<const double> x, double p0,
                                       std::span<const double> p,
                                       const MinimizeBudget& budget = {});

/// Truncated Hamiltonian over U ∩ B(0,N); always finite. The search reuses
/// the schedule stages below N (shared lattices), which makes the value
/// nonincreasing in N across schedule-aligned radii.
HamiltonianValue truncated_hamiltonian(const ControlProblem& problem,
                                       std::span<const double> x, double p0,
                                       std::span<const double> p, double N,
                                       const MinimizeBudget& budget = {});

/// One sampled sign disagreement between the raw and rescaled Hamiltonians.
struct SignWitness {
  Vec x;
  Vec p;
  double p0 = 0.0;
  double h_raw = 0.0;
  double h_rescaled = 0.0;
};

/// Outcome of the sampled raw-vs-rescaled sign equivalence test.
struct SignEquivalenceReport {
  int samples = 0;
  int disagreements = 0;
  int dead_band_skips = 0;
  int eval_failures = 0;
  std::vector<SignWitness> witnesses;  ///< at most 8 stored
  std::string text() const;
};

/// Samples (x, p0, p) with x in the given box, p0 in [0, 1.5], p in [-2,2]^n,
/// and compares the sign of the raw Hamiltonian against the rescaled one.
/// Values within dead_band of zero are skipped. The two searches
/// cross-evaluate each other's minimizer before comparing, so a sign
/// disagreement can only come from a genuine sign difference at a tested
/// control, not from one search out-exploring the other.
SignEquivalenceReport sign_equivalence_check(const ControlProblem& problem,
                                             std::span<const double> box_lo,
                                             std::span<const double> box_hi,
                                             int samples, std::uint64_t seed,
                                             const MinimizeBudget& budget = {},
                                             double dead_band = 1e-6);

}  // namespace mrf
