#include "mrf/gradient.hpp"

#include <algorithm>
#include <cmath>

#include "mrf/rng.hpp"

namespace mrf {

namespace {

Vec fd_gradient(const std::function<double(std::span<const double>)>& W,
                const Vec& at, double step) {
  Vec g(at.size());
  Vec probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + step;
    double hi = W(probe);
    probe[i] = at[i] - step;
    double lo = W(probe);
    probe[i] = at[i];
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

double distance(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<Vec> limiting_gradient_fd(
    const std::function<double(std::span<const double>)>& W,
    std::span<const double> x, const GradientFdOptions& options) {
  if (!(options.h > 0.0)) throw std::invalid_argument("probe radius must be positive");
  const double step = options.h / 100.0;
  const int n = static_cast<int>(x.size());
  const Vec base(x.begin(), x.end());

  std::vector<Vec> eval_points;
  eval_points.push_back(base);
  int probes = std::max(0, options.probes);
  int axis_probes = std::min(probes, 2 * n);
  for (int j = 0; j < axis_probes; ++j) {
    Vec p = base;
    int coord = j / 2;
    double sign = (j % 2 == 0) ? 1.0 : -1.0;
    p[static_cast<std::size_t>(coord)] += sign * options.h;
    eval_points.push_back(std::move(p));
  }
  // Remaining probes from a fixed-seed stream: deterministic for fixed inputs.
  SplitMix64 rng(0x6d72665f67726164ull);
  for (int j = axis_probes; j < probes; ++j) {
    Vec offset = rng.in_ball(n, options.h);
    Vec p = base;
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] += offset[static_cast<std::size_t>(i)];
    eval_points.push_back(std::move(p));
  }

  std::vector<Vec> reps;
  for (const Vec& p : eval_points) {
    Vec g = fd_gradient(W, p, step);
    bool merged = false;
    for (const Vec& r : reps) {
      double tol = options.merge_tol * (1.0 + std::max(norm(r), norm(g)));
      if (distance(r, g) <= tol) {
        merged = true;
        break;
      }
    }
    if (!merged) reps.push_back(std::move(g));
  }
  return reps;
}

GradientOracle fd_gradient_oracle(
    std::function<double(std::span<const double>)> W,
    const GradientFdOptions& options) {
  return [W = std::move(W), options](std::span<const double> x) {
    return limiting_gradient_fd(W, x, options);
  };
}

}  // namespace mrf
