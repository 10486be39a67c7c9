#include <stdexcept>
#include <string>

#include "doctest.h"
#include "mrf/scenario.hpp"

using namespace mrf;

namespace {

const char* kExprScenario = R"(# planar testbed
name = demo

n = 2
m = 1

[state_space]
kind = box
lower = [-1, -2]
upper = [1, 2]

[target]
kind = point
center = [0, 0]

[control_set]
kind = ball
radius = 2

[dynamics]
kind = expr
expr = [x2, u1 - x1]

[cost]
expr = x1^2 + u1^2

[candidate]
w = x1^2 + x2^2
p0 = 0.5
w0 = 2

[sampling]
sigma = 0.5
bands = 3
samples = 50
seed = 7
r_min = 0.001
box_lower = [-1, -1]
box_upper = [1, 1]

[budget]
grid = 21
refine = 40
radius_schedule = [1, 10]
divergence = -100000

[feedback]
eps = 0.5
delta = 0.01
delta_floor = 0.000001
substeps = 4
stop_frac = 0.05
)";

const char* kPolyScenario = R"(n = 1
m = 1

[state_space]
kind = all

[target]
kind = point
center = [0]

[control_set]
kind = box
radius = 1

[dynamics]
kind = poly
drift = [0]
term.1.alpha = [2]
term.1.field = [x1]
term.2.alpha = [3]
term.2.field = [x1]

[cost]
expr = 0
)";

void expect_error(const std::string& text, int line, const std::string& needle) {
  try {
    parse_scenario(text);
    FAIL_CHECK("expected a parse error mentioning '" << needle << "'");
  } catch (const ScenarioError& e) {
    CHECK(e.line == line);
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("scenario: every section is mirrored into the struct") {
  Scenario s = parse_scenario(kExprScenario);
  CHECK(s.name == "demo");
  CHECK(s.n == 2);
  CHECK(s.m == 1);

  CHECK(s.space_is_box);
  CHECK(s.space_lower == Vec{-1.0, -2.0});
  CHECK(s.space_upper == Vec{1.0, 2.0});
  CHECK(s.target_center == Vec{0.0, 0.0});
  CHECK(s.control_kind == ControlSet::Kind::Ball);
  CHECK(s.control_radius == 2.0);

  CHECK(!s.dynamics_is_poly);
  REQUIRE(s.dyn_expr.size() == 2);

  REQUIRE(s.has_candidate);
  CHECK(!s.w_is_builtin);
  CHECK(s.p0 == 0.5);
  CHECK(s.w0 == 2.0);

  REQUIRE(s.has_sampling);
  CHECK(s.sampling.sigma == 0.5);
  CHECK(s.sampling.bands == 3);
  CHECK(s.sampling.samples_per_band == 50);
  CHECK(s.sampling.seed == 7);
  CHECK(s.sampling.r_min == 0.001);
  CHECK(s.sampling.box_lo == Vec{-1.0, -1.0});
  CHECK(s.sampling.box_hi == Vec{1.0, 1.0});

  CHECK(s.budget.grid_points == 21);
  CHECK(s.budget.refine_iters == 40);
  CHECK(s.budget.radius_schedule == std::vector<double>{1.0, 10.0});
  CHECK(s.budget.divergence_threshold == -100000.0);

  CHECK(s.step.eps == 0.5);
  CHECK(s.step.delta == 0.01);
  CHECK(s.step.delta_floor == 0.000001);
  CHECK(s.step.substeps == 4);
  CHECK(s.step.stop_frac == 0.05);
  // the feedback step budget carries the minimizer budget along
  CHECK(s.step.minimize.grid_points == 21);
  CHECK(s.step.minimize.radius_schedule == std::vector<double>{1.0, 10.0});
}

TEST_CASE("scenario: assembled problem and candidate evaluate the expressions") {
  Scenario s = parse_scenario(kExprScenario);
  ControlProblem pr = s.problem();

  CHECK(pr.state_space.contains(Vec{0.5, 1.5}));
  CHECK(!pr.state_space.contains(Vec{1.5, 0.0}));
  CHECK(pr.control_set.contains(Vec{1.9}));
  CHECK(!pr.control_set.contains(Vec{2.1}));

  Vec x{0.3, 0.7};
  Vec u{0.2};
  Vec out(2);
  pr.dynamics(x, u, out);
  CHECK(out[0] == doctest::Approx(0.7));
  CHECK(out[1] == doctest::Approx(0.2 - 0.3));
  CHECK(pr.cost(x, u) == doctest::Approx(0.09 + 0.04));

  MrfCandidate c = s.candidate();
  CHECK(c.p0 == 0.5);
  CHECK(c.W0 == 2.0);
  CHECK(c.W(x) == doctest::Approx(0.09 + 0.49));
  std::vector<Vec> grads = c.gradient_oracle(x);
  REQUIRE(grads.size() == 1);
  CHECK(grads[0][0] == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(grads[0][1] == doctest::Approx(1.4).epsilon(1e-5));
}

TEST_CASE("scenario: serialization is a fixed point of parsing") {
  for (const char* text : {kExprScenario, kPolyScenario}) {
    const std::string canon = serialize_scenario(parse_scenario(text));
    CHECK(serialize_scenario(parse_scenario(canon)) == canon);
  }
}

TEST_CASE("scenario: poly dynamics build a polynomial system") {
  Scenario s = parse_scenario(kPolyScenario);
  REQUIRE(s.dynamics_is_poly);
  REQUIRE(s.terms.size() == 2);

  PolyDynamics pd = s.poly();
  CHECK(pd.n() == 1);
  CHECK(pd.m() == 1);
  CHECK(pd.degree() == 3);
  Vec x{0.5};
  Vec u{0.5};
  // u^2 x + u^3 x = 0.5*(0.25 + 0.125)
  CHECK(pd.eval(x, u)[0] == doctest::Approx(0.1875));

  Vec out(1);
  s.problem().dynamics(x, u, out);
  CHECK(out[0] == doctest::Approx(0.1875));

  // accessors guard their preconditions
  CHECK_THROWS_AS(s.candidate(), std::logic_error);
  Scenario expr_scenario = parse_scenario(kExprScenario);
  CHECK_THROWS_AS(expr_scenario.poly(), std::logic_error);
}

TEST_CASE("scenario: parse errors carry the offending line") {
  expect_error("[bogus]\n", 1, "unknown section");
  expect_error("n = 1\nn = 2\n", 2, "first at line 1");
  expect_error("hello\n", 1, "expected 'key = value'");
  expect_error("n =\n", 1, "empty value");
  expect_error("m = 1\n", 0, "missing required key 'n'");
  expect_error("n = 1\nm = abc\n", 2, "expected an integer");

  // controls cannot appear in autonomous drift fields (line 16)
  const std::string drift_u =
      "n = 1\nm = 1\n\n[state_space]\nkind = all\n\n[target]\nkind = point\n"
      "center = [0]\n\n[control_set]\nkind = all\n\n[dynamics]\nkind = poly\n"
      "drift = [u1]\n\n[cost]\nexpr = 0\n";
  expect_error(drift_u, 16, "in expression");

  // unknown keys are rejected with their section (junk at line 10)
  const std::string junk =
      "n = 1\nm = 1\n\n[state_space]\nkind = all\n\n[target]\nkind = point\n"
      "center = [0]\njunk = 5\n\n[control_set]\nkind = all\n\n[dynamics]\n"
      "kind = expr\nexpr = [u1 - x1]\n\n[cost]\nexpr = 0\n";
  expect_error(junk, 10, "unknown key 'junk'");

  const std::string base =
      "n = 1\nm = 1\n\n[state_space]\nkind = all\n\n[target]\nkind = point\n"
      "center = [0]\n\n[control_set]\nkind = all\n\n[dynamics]\nkind = expr\n"
      "expr = [u1 - x1]\n\n[cost]\nexpr = 0\n";

  // both w and builtin in one candidate (w at line 22)
  expect_error(base + "\n[candidate]\nw = x1^2\nbuiltin = sq-norm\np0 = 0.5\n",
               22, "exactly one");
  expect_error(base + "\n[budget]\nradius_schedule = [10, 1]\n", 22,
               "positive and increasing");
  expect_error(base + "\n[feedback]\nstop_frac = 1.5\n", 22,
               "stop_frac must lie in (0, 1)");
  expect_error(base + "\n[sampling]\nsigma = abc\n", 22, "expected a number");

  // list arities are checked against n
  const std::string short_dyn =
      "n = 2\nm = 1\n\n[state_space]\nkind = all\n\n[target]\nkind = point\n"
      "center = [0, 0]\n\n[control_set]\nkind = all\n\n[dynamics]\n"
      "kind = expr\nexpr = [x1]\n\n[cost]\nexpr = 0\n";
  expect_error(short_dyn, 16, "must have n entries");
}
