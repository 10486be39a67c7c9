#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mrf/builtins.hpp"
#include "mrf/expr.hpp"
#include "mrf/gradient.hpp"
#include "mrf/polysys.hpp"

using namespace mrf;

TEST_CASE("builtins: registry round-trips through the scenario format") {
  const std::vector<std::string>& names = builtin_names();
  REQUIRE(names.size() == 4);
  CHECK(names[0] == "gyroscope");
  CHECK(names[1] == "diag-example");
  CHECK(names[2] == "remark48-counterexample");
  CHECK(names[3] == "remark44-system");

  for (const std::string& name : names) {
    Scenario s = builtin_scenario(name);
    CHECK(s.name == name);
    const std::string canon = serialize_scenario(s);
    Scenario reparsed = parse_scenario(canon);
    CHECK(serialize_scenario(reparsed) == canon);
  }

  try {
    builtin_scenario("nope");
    FAIL_CHECK("expected an unknown-builtin error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("available:") != std::string::npos);
  }
}

TEST_CASE("builtins: gyroscope candidate W") {
  BuiltinCandidateW cand = builtin_candidate_w("gyroscope-w", 2);

  CHECK(cand.W(Vec{0.5, 0.0}) ==
        doctest::Approx(0.3384306477361245).epsilon(1e-12));
  CHECK(cand.W(Vec{0.0, 0.0}) == 0.0);
  REQUIRE(cand.gradient_oracle(Vec{0.0, 0.0}).size() == 1);
  CHECK(cand.gradient_oracle(Vec{0.0, 0.0})[0] == Vec{0.0, 0.0});

  // W1 <= W <= 2*W1 with W1 = tan^2 x1 + x2^2 across the sampling box
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double x1 = -1.4 + 2.8 * i / 9.0;
      const double x2 = -10.0 + 20.0 * j / 9.0;
      const double t = std::tan(x1);
      const double w1 = t * t + x2 * x2;
      const double w = cand.W(Vec{x1, x2});
      CHECK(w >= w1 - 1e-9);
      CHECK(w <= 2.0 * w1 + 1e-9);
    }
  }

  SUBCASE("smooth points have one gradient matching finite differences") {
    Vec x{0.4, 0.3};
    std::vector<Vec> grads = cand.gradient_oracle(x);
    REQUIRE(grads.size() == 1);
    std::vector<Vec> fd = limiting_gradient_fd(cand.W, x);
    REQUIRE(fd.size() == 1);
    CHECK(grads[0][0] == doctest::Approx(fd[0][0]).epsilon(1e-5));
    CHECK(grads[0][1] == doctest::Approx(fd[0][1]).epsilon(1e-5));
  }

  SUBCASE("both ridge lines carry two limiting gradients") {
    const double t = std::tan(0.6);
    for (double x2 : {t / std::sqrt(3.0), -std::sqrt(3.0) * t}) {
      Vec x{0.6, x2};
      std::vector<Vec> grads = cand.gradient_oracle(x);
      REQUIRE(grads.size() == 2);
      const double gap = std::abs(grads[0][0] - grads[1][0]) +
                         std::abs(grads[0][1] - grads[1][1]);
      CHECK(gap > 1e-6);

      // finite differences see the same two one-sided selections
      std::vector<Vec> fd = limiting_gradient_fd(cand.W, x);
      REQUIRE(fd.size() == 2);
      for (const Vec& g : grads) {
        double best = 1e30;
        for (const Vec& h : fd)
          best = std::min(best,
                          std::abs(g[0] - h[0]) + std::abs(g[1] - h[1]));
        CHECK(best < 1e-3 * (1.0 + std::abs(g[0]) + std::abs(g[1])));
      }
    }
  }
}

TEST_CASE("builtins: gyroscope scenario assembly") {
  Scenario s = builtin_scenario("gyroscope");
  CHECK(s.n == 2);
  CHECK(s.m == 2);
  CHECK(s.p0 == 0.9);
  CHECK(s.w_is_builtin);
  CHECK(s.w_builtin == "gyroscope-w");
  CHECK(s.sampling.box_lo == Vec{-1.4, -10.0});
  CHECK(s.sampling.box_hi == Vec{1.4, 10.0});

  ControlProblem pr = s.problem();
  // x1 lives in ]-pi/2, pi/2[, x2 is unconstrained
  CHECK(pr.state_space.contains(Vec{1.5, 100.0}));
  CHECK(!pr.state_space.contains(Vec{1.6, 0.0}));
  CHECK(pr.control_set.contains(Vec{1e9, -1e9}));

  // f = (x2, sin(x1)·(1 - u1·u2))
  Vec x{0.3, 1.2};
  Vec u{2.0, 5.0};
  Vec out(2);
  pr.dynamics(x, u, out);
  CHECK(out[0] == doctest::Approx(1.2));
  CHECK(out[1] == doctest::Approx(std::sin(0.3) * (1.0 - 10.0)));
  CHECK(pr.cost(x, u) == doctest::Approx(1.44));
}

TEST_CASE("builtins: diag-example scenario assembly") {
  Scenario s = builtin_scenario("diag-example");
  CHECK(s.p0 == doctest::Approx(0.5 / std::sqrt(2.0)));
  CHECK(s.w_builtin == "sq-norm");

  PolyDynamics pd = s.poly();
  REQUIRE(pd.terms().size() == 4);
  CHECK(pd.degree() == 4);

  ControlProblem pr = s.problem();
  Vec x{0.5, 0.5};
  Vec u{1.0, 2.0};
  CHECK(pr.cost(x, u) == doctest::Approx(0.5 * 5.0));

  // the u1*u2 field is singular at the origin, but its term only evaluates
  // where the monomial is nonzero
  Vec origin{0.0, 0.0};
  Vec out(2);
  CHECK_NOTHROW(pr.dynamics(origin, Vec{0.0, 1.0}, out));
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[1] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pr.dynamics(origin, Vec{1.0, 1.0}, out), EvalError);
}

TEST_CASE("builtins: remark48 counterexample scenario") {
  Scenario s = builtin_scenario("remark48-counterexample");
  CHECK(s.n == 1);
  CHECK(s.m == 1);
  CHECK(s.control_kind == ControlSet::Kind::Box);
  CHECK(s.control_radius == 1.0);
  CHECK(s.p0 == 0.5);
  CHECK(!s.w_is_builtin);

  // f = (u^2 + u^3)·x
  Vec out(1);
  s.problem().dynamics(Vec{0.5}, Vec{0.5}, out);
  CHECK(out[0] == doctest::Approx(0.1875));

  MrfCandidate c = s.candidate();
  CHECK(c.W(Vec{0.5}) == doctest::Approx(0.25));
  std::vector<Vec> grads = c.gradient_oracle(Vec{0.5});
  REQUIRE(grads.size() == 1);
  CHECK(grads[0][0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("builtins: remark44 system classifies as near-affine") {
  Scenario s = builtin_scenario("remark44-system");
  CHECK(s.n == 4);
  CHECK(s.m == 3);
  CHECK(!s.has_candidate);
  CHECK_THROWS_AS(s.candidate(), std::logic_error);
  CHECK(s.problem().cost(Vec{1.0, 1.0, 1.0, 1.0}, Vec{1.0, 1.0, 1.0}) == 0.0);

  ClassifyResult res = classify_near_affine(s.poly());
  REQUIRE(res.ok);
  CHECK(res.structure.M == 3);
  CHECK(res.structure.dbar == 2);
  CHECK(res.structure.K == std::vector<int>{1, 3, 5});
}

TEST_CASE("builtins: candidate registry validates names and dimensions") {
  BuiltinCandidateW sq = builtin_candidate_w("sq-norm", 3);
  CHECK(sq.W(Vec{1.0, 2.0, 3.0}) == doctest::Approx(14.0));
  std::vector<Vec> grads = sq.gradient_oracle(Vec{1.0, 2.0, 3.0});
  REQUIRE(grads.size() == 1);
  CHECK(grads[0] == Vec{2.0, 4.0, 6.0});

  CHECK_THROWS_AS(builtin_candidate_w("sq-norm", 0), std::invalid_argument);
  CHECK_THROWS_AS(builtin_candidate_w("gyroscope-w", 3), std::invalid_argument);
  CHECK_THROWS_AS(builtin_candidate_w("nope", 2), std::invalid_argument);
}
