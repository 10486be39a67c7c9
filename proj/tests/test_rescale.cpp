#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mrf/rescale.hpp"

using namespace mrf;

namespace {

/// f = (1, 0), l = 1 everywhere: |(l,f)| = sqrt(2), speed = 1 + sqrt(2).
ControlProblem constant_field_problem() {
  ControlProblem pr;
  pr.state_space = StateSpace::whole(2);
  pr.target = Target::origin(2);
  pr.control_set = ControlSet::all(1);
  pr.dynamics = [](std::span<const double>, std::span<const double>,
                   std::span<double> out) {
    out[0] = 1.0;
    out[1] = 0.0;
  };
  pr.cost = [](std::span<const double>, std::span<const double>) {
    return 1.0;
  };
  return pr;
}

}  // namespace

TEST_CASE("rescale: constant field has closed-form speed and direction") {
  ControlProblem pr = constant_field_problem();
  RescaledProblem rs = rescale(pr);
  const double s2 = std::sqrt(2.0);

  Vec x{0.3, -0.7};
  Vec u{0.0};
  CHECK(rs.speed(x, u) == doctest::Approx(1.0 + s2).epsilon(1e-15));

  Vec fbar(2);
  rs.problem.dynamics(x, u, fbar);
  CHECK(fbar[0] == doctest::Approx(1.0 / (1.0 + s2)).epsilon(1e-15));
  CHECK(fbar[1] == 0.0);
  CHECK(rs.problem.cost(x, u) ==
        doctest::Approx(1.0 / (1.0 + s2)).epsilon(1e-15));

  // rescaled speed is bounded by 1: |f̄|^2 + l̄^2 < 1
  double sq = fbar[0] * fbar[0] + fbar[1] * fbar[1];
  double lbar = rs.problem.cost(x, u);
  CHECK(sq + lbar * lbar < 1.0);

  // constraint data is shared, not transformed
  CHECK(rs.problem.n() == pr.n());
  CHECK(rs.problem.m() == pr.m());
  CHECK(rs.problem.control_set.kind == pr.control_set.kind);
}

TEST_CASE("rescale: zero data stays zero with unit speed") {
  ControlProblem pr = constant_field_problem();
  pr.dynamics = [](std::span<const double>, std::span<const double>,
                   std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
  };
  pr.cost = [](std::span<const double>, std::span<const double>) {
    return 0.0;
  };
  RescaledProblem rs = rescale(pr);
  Vec x{1.0, 1.0};
  Vec u{0.0};
  CHECK(rs.speed(x, u) == 1.0);
  CHECK(rs.problem.cost(x, u) == 0.0);
}

TEST_CASE("rescale: time maps invert each other on a uniform-speed run") {
  const double speed = 1.0 + std::sqrt(2.0);
  std::vector<double> s_mesh{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> speeds(s_mesh.size(), speed);
  TimeMaps maps(s_mesh, speeds);

  // t(s) = s / speed exactly (trapezoid of a constant)
  CHECK(maps.t_of_s(2.0) == doctest::Approx(2.0 / speed).epsilon(1e-15));
  CHECK(maps.t_of_s(0.75) == doctest::Approx(0.75 / speed).epsilon(1e-15));
  CHECK(maps.s_of_t(maps.t_of_s(1.3)) == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(maps.t_of_s(0.0) == 0.0);

  // t(s) <= s always (speed >= 1)
  for (double s : {0.1, 0.9, 1.7}) CHECK(maps.t_of_s(s) <= s);

  // out-of-range queries clamp to the mesh ends
  CHECK(maps.t_of_s(5.0) == doctest::Approx(maps.t_mesh().back()));
  CHECK(maps.s_of_t(-1.0) == doctest::Approx(0.0));
}

TEST_CASE("rescale: time maps reject corrupt samplings") {
  std::vector<double> bad_mesh{0.0, 1.0, 0.5};
  std::vector<double> speeds(3, 2.0);
  CHECK_THROWS_AS(TimeMaps(bad_mesh, speeds), std::invalid_argument);

  std::vector<double> mesh{0.0, 1.0, 2.0};
  std::vector<double> slow{1.0, 0.5, 1.0};  // speed < 1 is impossible
  CHECK_THROWS_AS(TimeMaps(mesh, slow), std::invalid_argument);

  std::vector<double> short_speed{1.0, 1.0};
  CHECK_THROWS_AS(TimeMaps(mesh, short_speed), std::invalid_argument);
}

TEST_CASE("rescale: cost invariance is exact for constant data") {
  // constant l = 1, speed = 1 + sqrt(2): lbar = 1/speed
  const double speed = 1.0 + std::sqrt(2.0);
  const int N = 11;
  std::vector<double> s_mesh(N), lbar(N), speeds(N);
  for (int i = 0; i < N; ++i) {
    s_mesh[i] = 0.2 * i;
    lbar[i] = 1.0 / speed;
    speeds[i] = speed;
  }
  CostInvariance ci = cost_invariance_check(s_mesh, lbar, speeds);
  // ∫ l̄ ds = S/speed; ∫ l dt = t(S) = S/speed
  CHECK(ci.integral_s == doctest::Approx(2.0 / speed).epsilon(1e-14));
  CHECK(ci.abs_diff < 1e-10);
  CHECK(ci.rel_diff < 1e-10);
}

TEST_CASE("rescale: cost invariance converges on varying data") {
  // l(s) = 2 + sin(s), speed(s) = 2 + cos(s): lbar = l/speed on a fine mesh.
  const int N = 1001;
  std::vector<double> s_mesh(N), lbar(N), speeds(N);
  for (int i = 0; i < N; ++i) {
    double s = 4.0 * i / (N - 1);
    s_mesh[i] = s;
    speeds[i] = 2.0 + std::cos(s);
    lbar[i] = (2.0 + std::sin(s)) / speeds[i];
  }
  CostInvariance ci = cost_invariance_check(s_mesh, lbar, speeds);
  CHECK(ci.rel_diff < 1e-4);
  CHECK(ci.integral_s > 0.0);
  CHECK(std::fabs(ci.integral_s - ci.integral_t) == ci.abs_diff);
}
