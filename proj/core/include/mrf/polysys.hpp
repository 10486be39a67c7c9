/// @file polysys.hpp
/// @brief Control-polynomial machinery: near-control-affine classification,
///        the associated affine system with explicit convex-hull witnesses,
///        maximal-degree and λ-diagonal subsystems, and the sampled
///        hypothesis checks that license transferring a verified candidate
///        from a subsystem to the full system.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mrf/hamiltonian.hpp"
#include "mrf/types.hpp"
#include "mrf/verifier.hpp"

namespace mrf {

/// Structure of a near-control-affine system: every control coordinate i
/// appears in the monomials with exponent 0 or a fixed odd K_i.
struct NearAffineStructure {
  std::vector<int> K;               ///< per-coordinate odd exponents (1 if unused)
  int dbar = 0;                     ///< max number of coordinates in one term
  int M = 0;                        ///< number of non-drift terms
  std::vector<MultiIndex> active;   ///< term multi-indices, graded-lex order

  /// Radius r̄(r) = (1/M)·min over coordinates i and j ∈ {1, dbar} of
  /// r^{j·K_i}; the admissible box for the affine controls. The inner min
  /// over j ∈ {1,…,dbar} reduces to the endpoints because r^{jK} is
  /// monotone in j. Returns +inf when M = 0.
  double rbar(double r) const;
};

/// classify_near_affine outcome; `offending`/`reason` describe the first
/// rejected term when !ok.
struct ClassifyResult {
  bool ok = false;
  NearAffineStructure structure;
  MultiIndex offending;
  std::string reason;
};

/// Infers K from the nonzero exponents. Rejects systems where a coordinate
/// appears with an even exponent or with two different exponents.
ClassifyResult classify_near_affine(const PolyDynamics& pd);

/// The associated affine system: one control coordinate w_k per active term,
/// in the same graded-lex order; f_aff(x, w) = f0(x) + Σ_k w_k f_{α_k}(x).
PolyDynamics affine_field(const NearAffineStructure& nas, const PolyDynamics& pd);

/// Cost for the affine problem: ℓ(x) = sup{l(x,u) : u ∈ U ∩ [−r,r]^m},
/// computed with the budgeted maximizer. Requires finite r; an analytic ℓ
/// must be supplied for r = ∞ (the sup may be +∞).
CostFn affine_cost(const ControlProblem& problem, double r,
                   const MinimizeBudget& budget = {});

/// All sign tuples (s_1,…,s_k) ∈ {−1,1}^k with product s, in binary-counting
/// order over the first k−1 entries. |sign_set(k, s)| = 2^{k−1}.
std::vector<std::vector<int>> sign_set(int k, int s);

/// Convex combination of genuine controls reproducing an affine-system value.
struct HullWitness {
  std::vector<double> weights;  ///< positive, sum to 1
  std::vector<Vec> controls;    ///< same length as weights

  /// max over active terms of |Σ_q weight_q·u_q^α − w_α| plus |Σ weights − 1|.
  double residual(const NearAffineStructure& nas, std::span<const double> w) const;
  /// |Σ_q weight_q·f(x,u_q) − f_aff(x,w)|.
  double field_residual(const PolyDynamics& pd, std::span<const double> x,
                        std::span<const double> w) const;
};

/// Builds the witness for f_aff(x,w) ∈ co f(x, [−r,r]^m): per active term α
/// with support size k, the 2^{k−1} sign controls with equal split
/// magnitudes |M·w_α|^{1/k} (then the K_i-th root per coordinate) and
/// weights 1/(M·2^{k−1}). Cross-monomial contributions cancel exactly over
/// each sign set. Requires |w_α| ≤ r̄(r) per coordinate when r is finite.
HullWitness hull_witness(const NearAffineStructure& nas, std::span<const double> w,
                         double r);

/// Drift plus the terms of top total degree d.
PolyDynamics maximal_subsystem(const PolyDynamics& pd);

/// Sampled hypothesis-check report shared by the A_max and A_diag probes.
struct HypCheckReport {
  bool pass = false;
  double worst = 0.0;  ///< worst normalized violation (A_max) or ratio (A_diag)
  Vec x;
  Vec u;
  double k = 1.0;      ///< scale factor (A_max) at the worst sample
  int samples = 0;
  std::string text() const;
};

/// Checks the cost decomposition l = M0(x) + M1(x,u): M1(x,0)=0, M1 ≥ 0,
/// M0 ≥ 0, and M1(x,ku) ≤ k^d·M1(x,u) for k ∈ {2, 10, 100, 1000}. Violations
/// are normalized by 1 + |k^d·M1(x,u)|.
HypCheckReport check_hyp_Amax(
    const std::function<double(std::span<const double>)>& M0,
    const std::function<double(std::span<const double>, std::span<const double>)>& M1,
    int d, std::span<const double> box_lo, std::span<const double> box_hi, int m,
    double u_radius = 2.0, int samples = 500,
    std::uint64_t seed = 0x5eed0003ull);

/// Point λ of the simplex Λ = {λ ∈ R^m : λ_i ≥ 0, Σλ_i ≤ 1} with the
/// homogeneity degree d used by the λ-diagonal construction.
struct DiagonalSpec {
  Vec lambda;
  int d = 0;

  double lambda0() const;  ///< 1 − Σλ_i
  /// Throws std::invalid_argument when λ leaves the simplex or d < 1.
  void validate() const;
};

/// The λ-diagonal subsystem: drift plus the pure-coordinate terms u_i^q f
/// scaled by λ_i^{(d−q)/d}; mixed terms are dropped. At λ_i = 0 the scale is
/// 0 for q < d and 1 for q = d (the limit of the defining formula).
PolyDynamics diagonal_subsystem(const PolyDynamics& pd, const DiagonalSpec& spec);

/// Explicit convex combination showing f^diag_λ(x,u) ∈ co f(x,R^m): pairs
/// (λ_i, λ_i^{-1/d}·u_i·e_i) plus (λ_0, 0). Requires λ_i > 0 wherever
/// u_i ≠ 0 (at λ_i = 0 the surviving top-degree term is a limit object with
/// no finite-control witness); throws std::domain_error otherwise.
HullWitness diagonal_witness(const DiagonalSpec& spec, std::span<const double> u);

/// Checks the hull-insensitivity inequality
///   l(x,0)·λ_0 + Σ λ_i·l(x, λ_i^{−1/d}·u_i·e_i) ≤ M0·l(x,u)
/// over sampled x, u, and interior λ (normalized exponential draws). The
/// report's `worst` is the largest ratio lhs/l(x,u) observed.
HypCheckReport check_hyp_Adiag(const CostFn& cost, int m, int d, double M0,
                               std::span<const double> box_lo,
                               std::span<const double> box_hi,
                               double u_radius = 2.0, int samples = 500,
                               std::uint64_t seed = 0x5eed0004ull);

/// Which transfer theorem fixes the full-system level: the maximal-degree
/// transfer keeps p0, the diagonal transfer divides by M0.
enum class TransferKind { Max, Diag };

/// Side-by-side verification of a candidate on a subsystem and the full
/// system at the transferred level.
struct TransferReport {
  VerificationReport sub;
  VerificationReport full;
  double p0_sub = 0.0;
  double p0_full = 0.0;
  bool pass = false;  ///< sub not verified, or full verified too
  std::string text() const;
};

/// Runs verify_mrf on both problems. The candidate's p0 is the subsystem
/// level; the full system is checked at p0 (Max) or p0/M0 (Diag; at M0 = 0
/// the level transfers unchanged).
TransferReport transfer_check(const ControlProblem& full_problem,
                              const ControlProblem& sub_problem,
                              const MrfCandidate& candidate, TransferKind kind,
                              double M0, const LevelSampling& sampling,
                              const MinimizeBudget& budget = {});

/// Pointwise scaling transfer property: where the maximal-subsystem
/// Hamiltonian is certified below −margin with minimizer ũ, the full-system
/// integrand at k·ũ must go negative for some k ∈ {1, 2, 4, …, 2^10}.
struct ScalingTransferCheck {
  bool applicable = false;  ///< subsystem value was below −margin
  bool pass = false;
  double sub_value = 0.0;
  Vec u_sub;
  double k = 0.0;
  double full_value = 0.0;
};

ScalingTransferCheck check_scaling_transfer(const ControlProblem& full_problem,
                                            const ControlProblem& sub_problem,
                                            std::span<const double> x, double p0,
                                            std::span<const double> p,
                                            double margin = 1e-6,
                                            const MinimizeBudget& budget = {});

}  // namespace mrf
