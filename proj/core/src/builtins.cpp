#include "mrf/builtins.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mrf {

namespace {

ScalarExpr X(const char* text, int n, int m) { return ScalarExpr::parse(text, n, m); }

std::vector<ScalarExpr> exprs(std::initializer_list<const char*> texts, int n, int m) {
  std::vector<ScalarExpr> out;
  for (const char* t : texts) out.push_back(X(t, n, m));
  return out;
}

Scenario::PolyTermSpec term(std::vector<int> alpha,
                            std::initializer_list<const char*> field, int n) {
  Scenario::PolyTermSpec t;
  t.alpha.exponents = std::move(alpha);
  t.field = exprs(field, n, 0);
  return t;
}

/// Balanced gyroscope (I = Mgz_G = 1): W = W1·(2 − |W2|) with
/// W1 = tan²x1 + x2² and W2 = (√3(x2² − tan²x1) + 2·tan(x1)·x2)/(2·W1).
/// |W2| ≤ 1 (the quadratic form has eigenvalues ±2), so W ∈ [W1, 2W1].
struct GyroscopeW {
  static double eval(std::span<const double> x) {
    const double T = std::tan(x[0]);
    const double y = x[1];
    const double W1 = T * T + y * y;
    if (W1 == 0.0) return 0.0;
    const double P = std::sqrt(3.0) * (y * y - T * T) + 2.0 * T * y;
    const double W2 = P / (2.0 * W1);
    return W1 * (2.0 - std::abs(W2));
  }

  /// Limiting gradients. W is smooth off the ridge {W2 = 0}; on the ridge
  /// both one-sided selections (2−|W2|)∇W1 ∓ W1·∇W2 are limiting gradients.
  static std::vector<Vec> gradients(std::span<const double> x) {
    const double T = std::tan(x[0]);
    const double y = x[1];
    const double sec2 = 1.0 + T * T;  // d(tan)/dx1
    const double W1 = T * T + y * y;
    if (W1 == 0.0) return {Vec{0.0, 0.0}};
    const double s3 = std::sqrt(3.0);
    const double P = s3 * (y * y - T * T) + 2.0 * T * y;
    const double W2 = P / (2.0 * W1);
    const Vec gW1 = {2.0 * T * sec2, 2.0 * y};
    const Vec gP = {sec2 * (2.0 * y - 2.0 * s3 * T), 2.0 * s3 * y + 2.0 * T};
    Vec gW2(2);
    for (int i = 0; i < 2; ++i) gW2[i] = (gP[i] - 2.0 * W2 * gW1[i]) / (2.0 * W1);
    const double outer = 2.0 - std::abs(W2);
    auto selection = [&](double sign_w2) {
      Vec g(2);
      for (int i = 0; i < 2; ++i) g[i] = outer * gW1[i] - sign_w2 * W1 * gW2[i];
      return g;
    };
    if (std::abs(W2) <= 1e-9) return {selection(1.0), selection(-1.0)};
    return {selection(W2 > 0.0 ? 1.0 : -1.0)};
  }
};

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

std::vector<Vec> sq_norm_gradients(std::span<const double> x) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i];
  return {std::move(g)};
}

Scenario make_gyroscope() {
  Scenario s;
  s.name = "gyroscope";
  s.n = 2;
  s.m = 2;
  s.space_is_box = true;
  const double half_pi = std::numbers::pi / 2.0;
  s.space_lower = {-half_pi, -inf()};
  s.space_upper = {half_pi, inf()};
  s.target_center = {0.0, 0.0};
  s.control_kind = ControlSet::Kind::All;
  s.dynamics_is_poly = true;
  s.drift = exprs({"x2", "sin(x1)"}, 2, 0);
  s.terms.push_back(term({1, 1}, {"0", "-sin(x1)"}, 2));
  s.cost_expr = X("x2^2", 2, 2);
  s.has_candidate = true;
  s.w_is_builtin = true;
  s.w_builtin = "gyroscope-w";
  s.p0 = 0.9;
  s.w0 = inf();
  s.has_sampling = true;
  s.sampling.sigma = 1.0;
  s.sampling.box_lo = {-1.4, -10.0};
  s.sampling.box_hi = {1.4, 10.0};
  s.step.minimize = s.budget;
  return s;
}

Scenario make_diag_example() {
  Scenario s;
  s.name = "diag-example";
  s.n = 2;
  s.m = 2;
  s.target_center = {0.0, 0.0};
  s.control_kind = ControlSet::Kind::All;
  s.dynamics_is_poly = true;
  s.drift = exprs({"x1", "x2"}, 2, 0);
  s.terms.push_back(term({0, 2}, {"0", "-1"}, 2));
  s.terms.push_back(term({1, 1}, {"(x1^2 + x2^2)^(-0.5)", "1"}, 2));
  s.terms.push_back(term({2, 0}, {"-1", "0"}, 2));
  s.terms.push_back(term({2, 2}, {"3*x1", "3*x2"}, 2));
  s.cost_expr = X("(x1^2 + x2^2)*(u1^2 + u2^2)", 2, 2);
  s.has_candidate = true;
  s.w_is_builtin = true;
  s.w_builtin = "sq-norm";
  s.p0 = 0.5 / std::sqrt(2.0);
  s.w0 = inf();
  s.has_sampling = true;
  s.sampling.sigma = 2.0;
  s.sampling.box_lo = {0.02, 0.02};
  s.sampling.box_hi = {1.3, 1.3};
  s.step.minimize = s.budget;
  return s;
}

Scenario make_remark48() {
  Scenario s;
  s.name = "remark48-counterexample";
  s.n = 1;
  s.m = 1;
  s.target_center = {0.0};
  s.control_kind = ControlSet::Kind::Box;
  s.control_radius = 1.0;
  s.dynamics_is_poly = true;
  s.drift = exprs({"0"}, 1, 0);
  s.terms.push_back(term({2}, {"x1"}, 1));
  s.terms.push_back(term({3}, {"x1"}, 1));
  s.cost_expr = X("0", 1, 1);
  s.has_candidate = true;
  s.w_is_builtin = false;
  s.w_expr = X("x1^2", 1, 0);
  s.p0 = 0.5;
  s.w0 = inf();
  s.has_sampling = true;
  s.sampling.sigma = 1.0;
  s.sampling.box_lo = {-1.5};
  s.sampling.box_hi = {1.5};
  s.step.minimize = s.budget;
  return s;
}

Scenario make_remark44() {
  Scenario s;
  s.name = "remark44-system";
  s.n = 4;
  s.m = 3;
  s.target_center = {0.0, 0.0, 0.0, 0.0};
  s.control_kind = ControlSet::Kind::All;
  s.dynamics_is_poly = true;
  s.drift = exprs({"0", "0", "0", "0"}, 4, 0);
  s.terms.push_back(term({1, 3, 0}, {"1", "0", "x2", "0"}, 4));
  s.terms.push_back(term({1, 0, 5}, {"0", "1", "-x1", "0"}, 4));
  s.terms.push_back(term({0, 3, 5}, {"0", "0", "0", "1"}, 4));
  s.cost_expr = X("0", 4, 3);
  s.step.minimize = s.budget;
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "gyroscope", "diag-example", "remark48-counterexample", "remark44-system"};
  return names;
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "gyroscope") return make_gyroscope();
  if (name == "diag-example") return make_diag_example();
  if (name == "remark48-counterexample") return make_remark48();
  if (name == "remark44-system") return make_remark44();
  std::string msg = "unknown builtin '" + name + "'; available:";
  for (const std::string& n : builtin_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

BuiltinCandidateW builtin_candidate_w(const std::string& name, int n) {
  BuiltinCandidateW out;
  if (name == "gyroscope-w") {
    if (n != 2)
      throw std::invalid_argument("gyroscope-w requires a 2-dimensional state");
    out.W = [](std::span<const double> x) { return GyroscopeW::eval(x); };
    out.gradient_oracle = [](std::span<const double> x) {
      return GyroscopeW::gradients(x);
    };
    return out;
  }
  if (name == "sq-norm") {
    if (n < 1) throw std::invalid_argument("sq-norm requires n >= 1");
    out.W = [](std::span<const double> x) { return sq_norm(x); };
    out.gradient_oracle = [](std::span<const double> x) {
      return sq_norm_gradients(x);
    };
    return out;
  }
  throw std::invalid_argument("unknown candidate builtin '" + name +
                              "'; available: gyroscope-w sq-norm");
}

}  // namespace mrf
