/// @file types.hpp
/// @brief Core data model: state space, target set, control set, exit-time
///        control problem, candidate restraint function, and polynomial-in-
///        control dynamics.
///
/// Conventions used throughout the library:
///  - states x ∈ R^n, controls u ∈ R^m, column data stored as
///    std::vector<double>;
///  - the running cost l and dynamics f are exposed as callables so that both
///    expression-defined and hand-coded systems share one interface;
///  - the candidate W comes with a gradient oracle returning the FULL set of
///    limiting gradients at a point (one element where W is differentiable,
///    several on kinks); every Hamiltonian test quantifies over that set.

#pragma once

#include <cmath>
#include <compare>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrf {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double inf() { return std::numeric_limits<double>::infinity(); }

/// Open state-space constraint Ω, represented as an axis-aligned box
/// (entries may be ±inf; the all-infinite box is R^n).
struct StateSpace {
  int n = 0;
  Vec lower;  ///< size n, -inf allowed
  Vec upper;  ///< size n, +inf allowed

  static StateSpace whole(int n) {
    StateSpace s;
    s.n = n;
    s.lower.assign(static_cast<std::size_t>(n), -inf());
    s.upper.assign(static_cast<std::size_t>(n), inf());
    return s;
  }

  static StateSpace box(Vec lo, Vec hi) {
    if (lo.size() != hi.size()) throw std::invalid_argument("state-space bounds size mismatch");
    StateSpace s;
    s.n = static_cast<int>(lo.size());
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    for (std::size_t i = 0; i < s.lower.size(); ++i)
      if (!(s.lower[i] < s.upper[i]))
        throw std::invalid_argument("state-space bounds must satisfy lower < upper");
    return s;
  }

  bool bounded() const {
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (std::isinf(lower[i]) || std::isinf(upper[i])) return false;
    return true;
  }

  /// Membership in the OPEN box.
  bool contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(x[i] > lower[i] && x[i] < upper[i])) return false;
    return true;
  }
};

/// Closed target set C with a distance function d(x) = dist(x, C).
/// Membership and distance are kept consistent: membership(x) ⇔ d(x) = 0.
struct Target {
  std::function<double(std::span<const double>)> distance;
  /// Boundary sample points when the target has an explicit description
  /// (a point target stores its center); used by the boundary-value check.
  std::vector<Vec> boundary_points;

  bool contains(std::span<const double> x) const { return distance(x) == 0.0; }

  static Target point(Vec center) {
    Target t;
    Vec c = center;
    t.distance = [c](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        double d = x[i] - c[i];
        s += d * d;
      }
      return std::sqrt(s);
    };
    t.boundary_points.push_back(std::move(center));
    return t;
  }

  static Target origin(int n) { return point(Vec(static_cast<std::size_t>(n), 0.0)); }
};

/// Control constraint set U ⊆ R^m.
struct ControlSet {
  enum class Kind { Box, Ball, All };

  Kind kind = Kind::All;
  int m = 0;
  double radius = inf();  ///< box half-width or ball radius; inf allowed

  static ControlSet box(int m, double r) {
    if (!(r > 0)) throw std::invalid_argument("control box half-width must be positive");
    return {Kind::Box, m, r};
  }
  static ControlSet ball(int m, double r) {
    if (!(r > 0)) throw std::invalid_argument("control ball radius must be positive");
    return {Kind::Ball, m, r};
  }
  static ControlSet all(int m) { return {Kind::All, m, inf()}; }

  bool bounded() const { return kind != Kind::All && !std::isinf(radius); }

  bool contains(std::span<const double> u) const {
    switch (kind) {
      case Kind::All: return true;
      case Kind::Box:
        for (double c : u)
          if (std::fabs(c) > radius) return false;
        return true;
      case Kind::Ball: return norm(u) <= radius;
    }
    return false;
  }

  /// Componentwise clamp into the box (identity for Ball/All).
  void clamp_box(std::span<double> u) const {
    if (kind != Kind::Box || std::isinf(radius)) return;
    for (double& c : u) c = std::fmax(-radius, std::fmin(radius, c));
  }
};

/// Dynamics callable: f(x, u) written into `out` (size n).
using DynamicsFn =
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

/// Running cost callable: l(x, u) ≥ 0.
using CostFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// The exit-time problem data (Ω, C, U, f, l).
struct ControlProblem {
  StateSpace state_space;
  Target target;
  ControlSet control_set;
  DynamicsFn dynamics;
  CostFn cost;

  int n() const { return state_space.n; }
  int m() const { return control_set.m; }

  Vec f(std::span<const double> x, std::span<const double> u) const {
    Vec out(static_cast<std::size_t>(n()));
    dynamics(x, u, out);
    return out;
  }
};

/// Set-valued gradient oracle: all limiting gradients of W at x.
using GradientOracle = std::function<std::vector<Vec>(std::span<const double>)>;

/// Candidate p0-minimum restraint function W with its discount p0 and the
/// boundary value W0 = lim W at ∂Ω (+inf when Ω is unbounded in that sense).
struct MrfCandidate {
  std::function<double(std::span<const double>)> W;
  GradientOracle gradient_oracle;
  double p0 = 0.0;
  double W0 = inf();
};

/// Multi-index α ∈ N^m for control monomials u^α = Π u_i^{α_i}.
struct MultiIndex {
  std::vector<int> exponents;

  int degree() const {
    int d = 0;
    for (int e : exponents) d += e;
    return d;
  }

  /// Number of non-zero entries c(α).
  int support_count() const {
    int c = 0;
    for (int e : exponents) c += e != 0 ? 1 : 0;
    return c;
  }

  std::vector<int> support() const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(exponents.size()); ++i)
      if (exponents[static_cast<std::size_t>(i)] != 0) idx.push_back(i);
    return idx;
  }

  bool operator==(const MultiIndex& o) const { return exponents == o.exponents; }

  /// Graded-lexicographic order: total degree first, then lexicographic on
  /// the exponent tuple. This is the canonical term order everywhere.
  std::strong_ordering operator<=>(const MultiIndex& o) const {
    if (int d = degree(), e = o.degree(); d != e) return d <=> e;
    return exponents <=> o.exponents;
  }

  /// u^α with integer exponentiation by repeated multiplication.
  double monomial(std::span<const double> u) const {
    double v = 1.0;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      double p = 1.0;
      for (int k = 0; k < exponents[i]; ++k) p *= u[i];
      v *= p;
    }
    return v;
  }

  std::string str() const;
};

/// State-dependent coefficient field f_α : R^n → R^n.
using VectorField = std::function<Vec(std::span<const double>)>;

/// One term u^α f_α(x) of a control-polynomial right-hand side.
struct PolyTerm {
  MultiIndex alpha;
  VectorField field;
};

/// Control-polynomial dynamics f(x,u) = f0(x) + Σ_α u^α f_α(x).
/// Terms are kept sorted in graded-lex order with distinct multi-indices,
/// each of degree ≥ 1 (the drift carries the degree-0 part).
class PolyDynamics {
 public:
  PolyDynamics() = default;
  PolyDynamics(int n, int m, VectorField drift, std::vector<PolyTerm> terms);

  int n() const { return n_; }
  int m() const { return m_; }
  const VectorField& drift() const { return drift_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }

  /// Max term degree d (0 for a drift-only system).
  int degree() const;

  /// f(x,u); evaluation order is drift then terms in graded-lex order.
  Vec eval(std::span<const double> x, std::span<const double> u) const;

  /// Adapter to the generic dynamics interface.
  DynamicsFn as_dynamics() const;

 private:
  int n_ = 0;
  int m_ = 0;
  VectorField drift_;
  std::vector<PolyTerm> terms_;
};

}  // namespace mrf
