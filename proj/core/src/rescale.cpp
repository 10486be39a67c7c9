#include "mrf/rescale.hpp"

#include <algorithm>
#include <cmath>

namespace mrf {

RescaledProblem rescale(const ControlProblem& problem) {
  if (!problem.dynamics || !problem.cost)
    throw std::invalid_argument("rescale: problem lacks dynamics or cost");

  DynamicsFn f = problem.dynamics;
  CostFn l = problem.cost;
  const int n = problem.n();

  auto speed = [f, l, n](std::span<const double> x,
                         std::span<const double> u) {
    Vec fx(static_cast<std::size_t>(n));
    f(x, u, fx);
    double lv = l(x, u);
    return 1.0 + std::sqrt(lv * lv + dot(fx, fx));
  };

  RescaledProblem out;
  out.problem.state_space = problem.state_space;
  out.problem.target = problem.target;
  out.problem.control_set = problem.control_set;
  out.problem.dynamics = [f, l, n](std::span<const double> x,
                                   std::span<const double> u,
                                   std::span<double> dst) {
    Vec fx(static_cast<std::size_t>(n));
    f(x, u, fx);
    double lv = l(x, u);
    double s = 1.0 + std::sqrt(lv * lv + dot(fx, fx));
    for (int i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] = fx[static_cast<std::size_t>(i)] / s;
  };
  out.problem.cost = [f, l, n](std::span<const double> x,
                               std::span<const double> u) {
    Vec fx(static_cast<std::size_t>(n));
    f(x, u, fx);
    double lv = l(x, u);
    double s = 1.0 + std::sqrt(lv * lv + dot(fx, fx));
    return lv / s;
  };
  out.speed = speed;
  return out;
}

TimeMaps::TimeMaps(std::vector<double> s_mesh, std::span<const double> speed)
    : s_(std::move(s_mesh)) {
  if (s_.size() != speed.size())
    throw std::invalid_argument("TimeMaps: mesh/speed size mismatch");
  if (s_.size() < 1) throw std::invalid_argument("TimeMaps: empty mesh");
  for (std::size_t i = 1; i < s_.size(); ++i)
    if (!(s_[i] > s_[i - 1]))
      throw std::invalid_argument("TimeMaps: s mesh must be strictly increasing");
  for (double w : speed)
    if (!(w >= 1.0 - 1e-9))
      throw std::invalid_argument("TimeMaps: speed below 1 (corrupt sampling)");

  t_.resize(s_.size());
  t_[0] = 0.0;
  for (std::size_t i = 1; i < s_.size(); ++i) {
    double ds = s_[i] - s_[i - 1];
    double integrand = 0.5 * (1.0 / speed[i] + 1.0 / speed[i - 1]);
    t_[i] = t_[i - 1] + ds * integrand;
    if (!(t_[i] > t_[i - 1]))
      throw std::invalid_argument("TimeMaps: non-monotone t mesh (numerics)");
  }
}

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys,
              double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t j = static_cast<std::size_t>(it - xs.begin());
  double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

}  // namespace

double TimeMaps::t_of_s(double s) const { return interp(s_, t_, s); }

double TimeMaps::s_of_t(double t) const { return interp(t_, s_, t); }

CostInvariance cost_invariance_check(std::span<const double> s_mesh,
                                     std::span<const double> lbar,
                                     std::span<const double> speed) {
  if (s_mesh.size() != lbar.size() || s_mesh.size() != speed.size())
    throw std::invalid_argument("cost_invariance_check: size mismatch");
  TimeMaps maps(std::vector<double>(s_mesh.begin(), s_mesh.end()), speed);
  const auto& t = maps.t_mesh();

  CostInvariance out;
  for (std::size_t i = 1; i < s_mesh.size(); ++i) {
    double ds = s_mesh[i] - s_mesh[i - 1];
    out.integral_s += 0.5 * ds * (lbar[i] + lbar[i - 1]);
    // l(x(t), u(t)) = l̄ · speed along the same trajectory
    double dt = t[i] - t[i - 1];
    out.integral_t += 0.5 * dt * (lbar[i] * speed[i] + lbar[i - 1] * speed[i - 1]);
  }
  out.abs_diff = std::fabs(out.integral_s - out.integral_t);
  out.rel_diff = out.abs_diff / std::max(1e-300, std::fabs(out.integral_s));
  return out;
}

}  // namespace mrf
