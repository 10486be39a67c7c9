#include <cmath>

#include "doctest.h"
#include "mrf/expr.hpp"

using namespace mrf;

namespace {

double ev(const char* text, std::vector<double> x = {},
          std::vector<double> u = {}) {
  return ScalarExpr::parse(text, static_cast<int>(x.size()),
                           static_cast<int>(u.size()))
      .eval(x, u);
}

}  // namespace

TEST_CASE("expr: arithmetic and precedence") {
  CHECK(ev("2 + 3 * 4") == 14.0);
  CHECK(ev("(2 + 3) * 4") == 20.0);
  CHECK(ev("2 + 3 * 4 ^ 2") == 50.0);
  CHECK(ev("2 ^ 3 ^ 2") == 512.0);  // right-associative
  CHECK(ev("-2 ^ 2") == -4.0);      // unary minus binds looser than ^
  CHECK(ev("10 / 4") == 2.5);
  CHECK(ev("1 - 2 - 3") == -4.0);   // left-associative
}

TEST_CASE("expr: variables are 1-based and dimension-checked") {
  CHECK(ev("x1 + 2*x2", {3.0, 4.0}) == 11.0);
  CHECK(ev("x1 * u1", {3.0}, {5.0}) == 15.0);
  CHECK_THROWS_AS(ScalarExpr::parse("x3", 2, 0), ParseError);
  CHECK_THROWS_AS(ScalarExpr::parse("u1", 2, 0), ParseError);
  try {
    ScalarExpr::parse("x1 + x5", 2, 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);  // offset of x5
  }
}

TEST_CASE("expr: functions and named constants") {
  CHECK(ev("sin(0)") == 0.0);
  CHECK(ev("cos(0)") == 1.0);
  CHECK(ev("abs(-3)") == 3.0);
  CHECK(ev("sign(-0.5)") == -1.0);
  CHECK(ev("min(2, -1)") == -1.0);
  CHECK(ev("max(2, -1)") == 2.0);
  CHECK(ev("atan2(1, 1)") == doctest::Approx(std::atan(1.0)));
  CHECK(ev("pi") == doctest::Approx(std::acos(-1.0)));
  CHECK(ev("sqrt(2)^2") == doctest::Approx(2.0));
  CHECK_THROWS_AS(ScalarExpr::parse("sin(1, 2)", 0, 0), ParseError);
  CHECK_THROWS_AS(ScalarExpr::parse("atan2(1)", 0, 0), ParseError);
  CHECK_THROWS_AS(ScalarExpr::parse("frob(1)", 0, 0), ParseError);
}

TEST_CASE("expr: evaluation domain errors raise EvalError") {
  CHECK_THROWS_AS(ev("1 / x1", {0.0}), EvalError);
  CHECK_THROWS_AS(ev("log(0)"), EvalError);
  CHECK_THROWS_AS(ev("log(-1)"), EvalError);
  CHECK_THROWS_AS(ev("sqrt(-1)"), EvalError);
  CHECK_THROWS_AS(ev("exp(1000)"), EvalError);  // overflow -> non-finite
  CHECK_THROWS_AS(ev("0 ^ (-1)"), EvalError);
  CHECK_THROWS_AS(ev("(-2) ^ 0.5"), EvalError);
  // inf may appear inside min/max saturation but never escape eval().
  CHECK(ev("min(inf, x1)", {2.0}) == 2.0);
  CHECK_THROWS_AS(ev("inf"), EvalError);
  CHECK_THROWS_AS(ev("1 + inf"), EvalError);
}

TEST_CASE("expr: parse error positions point at the offending byte") {
  try {
    ScalarExpr::parse("1 + * 2", 0, 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 4);
  }
  try {
    ScalarExpr::parse("sin(1", 0, 0);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
  CHECK_THROWS_AS(ScalarExpr::parse("1 2", 0, 0), ParseError);  // trailing input
}

TEST_CASE("expr: printing round-trips the tree") {
  const char* texts[] = {
      "x2^2",
      "-sin(x1)",
      "(x1^2 + x2^2)*(u1^2 + u2^2)",
      "(x1^2 + x2^2)^(-0.5)",
      "min(1, max(x1, -x2)) / (1 + abs(u1))",
      "atan2(x1, x2) - pi",
  };
  for (const char* t : texts) {
    ScalarExpr e = ScalarExpr::parse(t, 2, 2);
    ScalarExpr back = ScalarExpr::parse(e.str(), 2, 2);
    CHECK(e.equals(back));
    CHECK(back.str() == e.str());  // printing is a fixed point
  }
}

TEST_CASE("expr: format_double is shortest round-trip and byte-stable") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.0) == "-0");
  CHECK(format_double(1592590337.0) == "1592590337");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  double v = 0.3384306477361245;
  CHECK(std::stod(format_double(v)) == v);
}
