/// @file rescale.hpp
/// @brief Time-rescaling onto bounded data:
///        (l̄, f̄)(x,u) = (l, f)(x,u) / (1 + |(l, f)(x,u)|)
///        with |(l,f)| the Euclidean norm of the concatenated (1+n)-vector.
///
/// The rescaled problem has speed < 1, shares its infimum sign with the
/// original Hamiltonian pointwise in (x, p0, p), and leaves the running cost
/// integral invariant under the time change t(s) = ∫_0^s ds'/(1+|(l,f)|).
/// Trajectory-facing helpers build the monotone maps t(s), s(t) from sampled
/// speeds and check the cost-integral invariance on a synthesized run.

#pragma once

#include "mrf/types.hpp"

namespace mrf {

/// The rescaled problem plus access to the speed factor 1 + |(l,f)(x,u)|.
struct RescaledProblem {
  ControlProblem problem;  ///< same Ω, C, U; dynamics f̄ and cost l̄
  /// speed(x,u) = 1 + |(l,f)(x,u)| (the Jacobian dt/ds of the time change).
  std::function<double(std::span<const double>, std::span<const double>)> speed;
};

/// Builds the rescaled problem. The wrapped callables evaluate the original
/// (l, f) exactly once per call.
RescaledProblem rescale(const ControlProblem& problem);

/// Monotone piecewise-linear time maps between the rescaled clock s and the
/// original clock t, built from sampled speeds along a trajectory.
class TimeMaps {
 public:
  /// s_mesh strictly increasing; speed[i] = 1+|(l,f)| at mesh node i (≥ 1).
  /// t is the trapezoid integral of 1/speed. Throws std::invalid_argument on
  /// a non-monotone mesh or speeds < 1 beyond tolerance (both indicate the
  /// sampling is too coarse or corrupt).
  TimeMaps(std::vector<double> s_mesh, std::span<const double> speed);

  double t_of_s(double s) const;
  double s_of_t(double t) const;
  const std::vector<double>& s_mesh() const { return s_; }
  const std::vector<double>& t_mesh() const { return t_; }

 private:
  std::vector<double> s_;
  std::vector<double> t_;
};

/// Result of the cost-invariance comparison ∫ l̄ ds vs ∫ l dt.
struct CostInvariance {
  double integral_s = 0.0;  ///< trapezoid of l̄ over the s mesh
  double integral_t = 0.0;  ///< trapezoid of l = l̄·speed over the t mesh
  double abs_diff = 0.0;
  double rel_diff = 0.0;    ///< abs_diff / max(1e-300, |integral_s|)
};

/// Compares the two cost integrals on a common trajectory sampling:
/// lbar[i] and speed[i] are the rescaled cost and the speed at s_mesh[i].
CostInvariance cost_invariance_check(std::span<const double> s_mesh,
                                     std::span<const double> lbar,
                                     std::span<const double> speed);

}  // namespace mrf
