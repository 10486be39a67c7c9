/// @file verifier.hpp
/// @brief Sampled numerical verification that a candidate W is a p0-minimum
///        restraint function: band-wise Hamiltonian margins over the level
///        region W ∈ ]0, 2σ], monotone decrease-rate and feasible-radius
///        tables (γ̂, N̂), and positive-definiteness / properness /
///        boundary-value side checks.
///
/// Everything here is a certificate AT THE SAMPLED POINTS ONLY. The verdict
/// quantifies over the drawn samples and the gradient-oracle covectors at
/// them; the γ̂ table is the sampled lower envelope of the margin
/// −max_p H̄(x, p0, p) per level band, and N̂ the matching upper envelope of
/// the smallest control-search radius that already certifies that margin.
/// Reports restate this; no global claim is implied.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mrf/hamiltonian.hpp"
#include "mrf/types.hpp"

namespace mrf {

/// Sampled values within ±kViolationTol of zero are treated as "not strictly
/// negative", i.e. as violations: the defining inequality is strict.
inline constexpr double kViolationTol = 1e-9;

/// Level-band sampling plan. Bands are geometric with ratio 1/2 from 2σ:
/// band i covers W ∈ [2σ·2^{-i}, 2σ·2^{1-i}], i = 1..bands. When
/// r_min > 0 the band count is raised until the lowest band reaches r_min
/// (used by feedback synthesis, which needs tables deep below σ).
struct LevelSampling {
  double sigma = 1.0;
  int bands = 8;
  int samples_per_band = 2000;
  std::uint64_t seed = 0x5eed0001u;
  Vec box_lo;
  Vec box_hi;
  double r_min = 0.0;

  /// Decreasing lower band edges r_1 > ... > r_B.
  std::vector<double> band_edges() const;
};

/// Per-band sampling outcome.
struct BandResult {
  double r_lo = 0.0;
  double r_hi = 0.0;
  int samples = 0;          ///< accepted samples (0 ⇒ empty band)
  double worst_margin = 0.0;  ///< min over samples of −max_p H̄
  double raw_N = 0.0;       ///< max over samples of the smallest certifying radius
  Vec witness_x;            ///< sample attaining worst_margin
};

/// Monotone envelope tables γ̂ (increasing in r) and N̂ (decreasing in r) on
/// the decreasing band grid, with conservative out-of-range extensions:
/// γ̂ scales linearly through 0 below the grid and clamps above; N̂ clamps.
struct EnvelopeTables {
  std::vector<double> r;      ///< decreasing grid r_1 > ... > r_B
  std::vector<double> gamma;  ///< γ̂(r_i), non-increasing along the vector
  std::vector<double> N;      ///< N̂(r_i), non-decreasing along the vector

  double gamma_at(double rr) const;
  double N_at(double rr) const;
  /// γ̃(r) = min{r, γ̂(r)}: strictly increasing through 0, used by the
  /// comparison-function machinery.
  double gamma_tilde(double rr) const { return std::min(rr, gamma_at(rr)); }
  bool empty() const { return r.empty(); }
};

struct CheckResult {
  bool pass = true;
  std::string detail;
};

enum class Verdict { Verified, Violated, Inconclusive };

std::string verdict_name(Verdict v);

/// CLI-facing exit code: verified → 0, violated → 1, inconclusive → 2.
int verdict_exit_code(Verdict v);

/// A concrete violation certificate: at (x, p), every control the budgeted
/// search tested kept <p, f(x,u)> + p0·l(x,u) ≥ value ≥ −tolerance; the best
/// of them is stored for direct re-evaluation.
struct ViolationWitness {
  Vec x;
  Vec p;
  Vec u;
  double value = 0.0;      ///< rescaled best value (≥ −kViolationTol)
  double raw_value = 0.0;  ///< original-scale integrand at (x, u, p)
};

struct VerificationReport {
  Verdict verdict = Verdict::Inconclusive;
  std::optional<ViolationWitness> witness;
  std::vector<BandResult> bands;
  EnvelopeTables tables;
  CheckResult positive_definite;
  CheckResult properness;
  CheckResult boundary_value;
  std::string inconclusive_reason;

  std::string scenario_name;
  double p0 = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int samples_per_band = 0;

  /// Deterministic plain-text serialization (stable bytes for fixed inputs).
  std::string text() const;
};

/// Runs the banded sampling verification on the RESCALED Hamiltonian.
/// Verdict: violated iff some sampled value ≥ −kViolationTol (witness
/// attached), verified iff every sampled value < −kViolationTol,
/// inconclusive when a band receives no samples. Side checks are reported
/// but do not change the verdict.
VerificationReport verify_mrf(const ControlProblem& problem,
                              const MrfCandidate& candidate,
                              const LevelSampling& sampling,
                              const MinimizeBudget& budget = {});

/// Positive-definiteness, target boundary value, and properness proxy for W.
struct CandidateChecks {
  CheckResult positive_definite;
  CheckResult properness;
  CheckResult boundary_value;
};

CandidateChecks check_positive_definite_proper(const ControlProblem& problem,
                                               const MrfCandidate& candidate,
                                               const LevelSampling& sampling);

/// Sampled probe of the rescaling sufficient condition
/// |D_u(l,f)(x,u)| / (1 + |(l,f)(x,u)|)² ≤ η(x):
/// finite-difference u-Jacobian on random (x, u) with |u| ≤ u_radius,
/// reporting the worst ratio against η. A pass certifies the bound on the
/// sampled sweep only.
struct RemarkAPrimeReport {
  bool pass = false;
  double worst_ratio = 0.0;
  Vec worst_x;
  Vec worst_u;
  int samples = 0;
  double u_radius = 0.0;
  std::string text() const;
};

RemarkAPrimeReport check_remark_A_prime(
    const ControlProblem& problem,
    const std::function<double(std::span<const double>)>& eta,
    std::span<const double> box_lo, std::span<const double> box_hi,
    int samples = 500, double u_radius = 10.0,
    std::uint64_t seed = 0x5eed0002u);

}  // namespace mrf
