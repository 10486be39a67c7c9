#include <cmath>

#include "doctest.h"
#include "mrf/gradient.hpp"

using namespace mrf;

TEST_CASE("gradient: smooth function yields a singleton") {
  auto W = [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1];
  };
  Vec x{0.3, -0.2};
  std::vector<Vec> grads = limiting_gradient_fd(W, x);
  REQUIRE(grads.size() == 1);
  CHECK(grads[0][0] == doctest::Approx(0.6).epsilon(1e-5));
  CHECK(grads[0][1] == doctest::Approx(-0.4).epsilon(1e-5));
}

TEST_CASE("gradient: kink produces one representative per selection") {
  auto W = [](std::span<const double> x) { return std::fabs(x[0]); };
  Vec x{0.0};
  std::vector<Vec> grads = limiting_gradient_fd(W, x);
  REQUIRE(grads.size() == 2);
  double lo = std::min(grads[0][0], grads[1][0]);
  double hi = std::max(grads[0][0], grads[1][0]);
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));

  // away from the kink the surrogate is a singleton again
  std::vector<Vec> off = limiting_gradient_fd(W, Vec{0.5});
  REQUIRE(off.size() == 1);
  CHECK(off[0][0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("gradient: determinism and option plumbing") {
  auto W = [](std::span<const double> x) {
    return std::sin(x[0]) + x[1] * x[1] * x[1];
  };
  Vec x{0.7, 0.4};
  std::vector<Vec> a = limiting_gradient_fd(W, x);
  std::vector<Vec> b = limiting_gradient_fd(W, x);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  GradientFdOptions tight;
  tight.h = 1e-7;
  std::vector<Vec> c = limiting_gradient_fd(W, x, tight);
  REQUIRE(c.size() == 1);
  CHECK(c[0][0] == doctest::Approx(std::cos(0.7)).epsilon(1e-4));
  CHECK(c[0][1] == doctest::Approx(3 * 0.4 * 0.4).epsilon(1e-4));
}

TEST_CASE("gradient: oracle wrapper matches the free function") {
  auto W = [](std::span<const double> x) {
    return 2.0 * x[0] - 0.5 * x[1];
  };
  GradientOracle oracle = fd_gradient_oracle(W);
  Vec x{1.0, 2.0};
  std::vector<Vec> via_oracle = oracle(x);
  std::vector<Vec> direct = limiting_gradient_fd(W, x);
  REQUIRE(via_oracle.size() == direct.size());
  CHECK(via_oracle[0] == direct[0]);
  CHECK(via_oracle[0][0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(via_oracle[0][1] == doctest::Approx(-0.5).epsilon(1e-7));
}
