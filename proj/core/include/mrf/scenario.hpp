/// @file scenario.hpp
/// @brief Text scenario format: a small INI-style description of a control
///        problem, candidate, and solver budgets, with a canonical
///        serializer (serializing a parsed scenario is a fixed point).
///
/// Format: `key = value` lines grouped under `[section]` headers, `#`
/// comments, and `[a, b, c]` lists whose entries may be numbers or scalar
/// expressions. Sections:
///
///   (top level)    name, n, m
///   [state_space]  kind = all | box; lower/upper (box only)
///   [target]       kind = point; center
///   [control_set]  kind = all | box | ball; radius
///   [dynamics]     kind = expr | poly; expr = [..] or
///                  drift = [..] plus term.N.alpha / term.N.field pairs
///   [cost]         expr
///   [candidate]    w = <expr> or builtin = <name>; p0; w0       (optional)
///   [sampling]     sigma, bands, samples, seed, r_min,
///                  box_lower, box_upper                         (optional)
///   [budget]       grid, refine, radius_schedule, divergence    (optional)
///   [feedback]     eps, delta, delta_floor, substeps, stop_frac (optional)
///
/// Unknown keys and sections are rejected with their line number.

#pragma once

#include <string>
#include <vector>

#include "mrf/expr.hpp"
#include "mrf/feedback.hpp"
#include "mrf/hamiltonian.hpp"
#include "mrf/types.hpp"
#include "mrf/verifier.hpp"

namespace mrf {

/// Parse failure with the 1-based line number of the offending line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, int line);
  int line = 0;
};

/// Parsed scenario. Expressions are kept as ScalarExpr so the serializer can
/// reprint them canonically.
struct Scenario {
  std::string name;
  int n = 0;
  int m = 0;

  bool space_is_box = false;
  Vec space_lower, space_upper;

  Vec target_center;

  ControlSet::Kind control_kind = ControlSet::Kind::All;
  double control_radius = inf();

  bool dynamics_is_poly = false;
  std::vector<ScalarExpr> dyn_expr;  ///< n entries, in x and u (kind = expr)
  std::vector<ScalarExpr> drift;     ///< n entries, in x only (kind = poly)
  struct PolyTermSpec {
    MultiIndex alpha;
    std::vector<ScalarExpr> field;   ///< n entries, in x only
  };
  std::vector<PolyTermSpec> terms;

  ScalarExpr cost_expr;

  bool has_candidate = false;
  bool w_is_builtin = false;
  std::string w_builtin;
  ScalarExpr w_expr;
  double p0 = 0.0;
  double w0 = inf();

  bool has_sampling = false;
  LevelSampling sampling;

  MinimizeBudget budget;
  StepBudget step;  ///< step.minimize mirrors `budget` after assembly

  /// Assembled control problem (expressions wrapped into callables).
  ControlProblem problem() const;
  /// Poly dynamics object; throws std::logic_error when kind = expr.
  PolyDynamics poly() const;
  /// Candidate with its gradient oracle (finite differences for expression
  /// W, the registered analytic oracle for builtin W). Throws when absent.
  MrfCandidate candidate() const;
};

Scenario parse_scenario(const std::string& text);

/// Canonical text form: fixed section and key order, format_double numbers,
/// canonical expression printing. parse(serialize(s)) reproduces s, and
/// serialize ∘ parse is the identity on canonical text.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace mrf
