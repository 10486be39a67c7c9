#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mrf/hamiltonian.hpp"
#include "mrf/verifier.hpp"

using namespace mrf;

namespace {

/// 1D testbed: f = u on [-1,1], l = x^2, W = x^2 on Omega = ]-1,1[.
/// At u = -sign(x) the integrand 2x·u + p0·x^2 is negative for small p0,
/// positive for large p0, which exercises both verdicts.
ControlProblem scalar_problem() {
  ControlProblem pr;
  pr.state_space = StateSpace::box({-1.0}, {1.0});
  pr.target = Target::origin(1);
  pr.control_set = ControlSet::ball(1, 1.0);
  pr.dynamics = [](std::span<const double>, std::span<const double> u,
                   std::span<double> out) { out[0] = u[0]; };
  pr.cost = [](std::span<const double> x, std::span<const double>) {
    return x[0] * x[0];
  };
  return pr;
}

MrfCandidate quadratic_candidate(double p0, double w0 = 1.0) {
  MrfCandidate c;
  c.W = [](std::span<const double> x) { return x[0] * x[0]; };
  c.gradient_oracle = [](std::span<const double> x) {
    return std::vector<Vec>{Vec{2.0 * x[0]}};
  };
  c.p0 = p0;
  c.W0 = w0;
  return c;
}

LevelSampling small_sampling() {
  LevelSampling s;
  s.sigma = 0.25;
  s.bands = 4;
  s.samples_per_band = 200;
  s.box_lo = {-1.0};
  s.box_hi = {1.0};
  return s;
}

}  // namespace

TEST_CASE("verifier: band edges halve from 2*sigma and honor r_min") {
  LevelSampling s;
  s.sigma = 1.0;
  s.bands = 8;
  std::vector<double> edges = s.band_edges();
  REQUIRE(edges.size() == 8);
  CHECK(edges.front() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < edges.size(); ++i)
    CHECK(edges[i] == doctest::Approx(edges[i - 1] / 2.0));

  s.bands = 2;
  s.r_min = 0.01;
  edges = s.band_edges();
  CHECK(edges.size() == 8);  // extended until the lowest edge reaches r_min
  CHECK(edges.back() <= 0.01);
  CHECK(edges[edges.size() - 2] > 0.01);

  s.r_min = 1e-30;
  CHECK(s.band_edges().size() == 64);  // hard cap
}

TEST_CASE("verifier: envelope table interpolation and extensions") {
  EnvelopeTables t;
  t.r = {1.0, 0.5, 0.25};
  t.gamma = {0.3, 0.2, 0.1};
  t.N = {10.0, 20.0, 40.0};

  // on-grid
  CHECK(t.gamma_at(1.0) == doctest::Approx(0.3));
  CHECK(t.gamma_at(0.25) == doctest::Approx(0.1));
  CHECK(t.N_at(0.5) == doctest::Approx(20.0));
  // interpolation between grid points
  CHECK(t.gamma_at(0.75) == doctest::Approx(0.25));
  CHECK(t.N_at(0.375) == doctest::Approx(30.0));
  // clamp above the grid
  CHECK(t.gamma_at(2.0) == doctest::Approx(0.3));
  CHECK(t.N_at(2.0) == doctest::Approx(10.0));
  // below the grid: gamma scales linearly through zero, N clamps
  CHECK(t.gamma_at(0.125) == doctest::Approx(0.05));
  CHECK(t.gamma_at(0.0) == doctest::Approx(0.0));
  CHECK(t.N_at(0.01) == doctest::Approx(40.0));
  // gamma_tilde caps by r itself
  CHECK(t.gamma_tilde(1.0) == doctest::Approx(0.3));
  CHECK(t.gamma_tilde(0.05) == doctest::Approx(std::min(0.05, t.gamma_at(0.05))));

  EnvelopeTables empty;
  CHECK(empty.empty());
}

TEST_CASE("verifier: verdict names and exit codes") {
  CHECK(verdict_name(Verdict::Verified) == "verified");
  CHECK(verdict_name(Verdict::Violated) == "violated");
  CHECK(verdict_name(Verdict::Inconclusive) == "inconclusive");
  CHECK(verdict_exit_code(Verdict::Verified) == 0);
  CHECK(verdict_exit_code(Verdict::Violated) == 1);
  CHECK(verdict_exit_code(Verdict::Inconclusive) == 2);
}

TEST_CASE("verifier: small negative-margin system verifies") {
  ControlProblem pr = scalar_problem();
  MrfCandidate cand = quadratic_candidate(0.5);
  LevelSampling plan = small_sampling();

  VerificationReport rep = verify_mrf(pr, cand, plan);
  CHECK(rep.verdict == Verdict::Verified);
  CHECK_FALSE(rep.witness.has_value());
  REQUIRE(rep.bands.size() == 4);
  for (const BandResult& b : rep.bands) {
    // the band-minimum sharpening may append a few extra records
    CHECK(b.samples >= plan.samples_per_band);
    CHECK(b.samples <= plan.samples_per_band + 3);
    CHECK(b.worst_margin > 0.0);
    CHECK(b.r_lo < b.r_hi);
  }

  // tables are monotone: gamma non-increasing, N non-decreasing along the
  // decreasing r grid
  REQUIRE(rep.tables.r.size() == 4);
  for (std::size_t i = 1; i < rep.tables.r.size(); ++i) {
    CHECK(rep.tables.r[i] < rep.tables.r[i - 1]);
    CHECK(rep.tables.gamma[i] <= rep.tables.gamma[i - 1]);
    CHECK(rep.tables.N[i] >= rep.tables.N[i - 1]);
  }
  // the control set is the ball of radius 1, so no larger radius can appear
  for (double nv : rep.tables.N) CHECK(nv == doctest::Approx(1.0));

  CHECK(rep.positive_definite.pass);
  CHECK(rep.properness.pass);
  CHECK(rep.boundary_value.pass);
  CHECK(rep.text().find("verified") != std::string::npos);
}

TEST_CASE("verifier: large p0 produces a violation witness") {
  ControlProblem pr = scalar_problem();
  MrfCandidate cand = quadratic_candidate(10.0);
  LevelSampling plan = small_sampling();

  VerificationReport rep = verify_mrf(pr, cand, plan);
  CHECK(rep.verdict == Verdict::Violated);
  REQUIRE(rep.witness.has_value());
  const ViolationWitness& w = *rep.witness;
  CHECK(w.value >= -kViolationTol);
  // the witness re-evaluates: raw integrand at (x, u, p) matches the record
  double raw = hamiltonian_integrand(pr, w.x, cand.p0, w.p, w.u);
  CHECK(raw == doctest::Approx(w.raw_value).epsilon(1e-12));
  CHECK(rep.text().find("violated") != std::string::npos);
}

TEST_CASE("verifier: unreachable bands are inconclusive, not verified") {
  ControlProblem pr = scalar_problem();
  MrfCandidate cand = quadratic_candidate(0.5);
  LevelSampling plan = small_sampling();
  plan.box_lo = {0.9};
  plan.box_hi = {1.1};  // W >= 0.81 in the box: every band below 0.5 is empty
  plan.samples_per_band = 50;

  VerificationReport rep = verify_mrf(pr, cand, plan);
  CHECK(rep.verdict == Verdict::Inconclusive);
  CHECK(rep.inconclusive_reason.find("empty band") != std::string::npos);
  CHECK(rep.text().find("inconclusive") != std::string::npos);
}

TEST_CASE("verifier: report text is byte-stable") {
  ControlProblem pr = scalar_problem();
  MrfCandidate cand = quadratic_candidate(0.5);
  LevelSampling plan = small_sampling();
  std::string a = verify_mrf(pr, cand, plan).text();
  std::string b = verify_mrf(pr, cand, plan).text();
  CHECK(a == b);
}

TEST_CASE("verifier: input validation") {
  ControlProblem pr = scalar_problem();
  LevelSampling plan = small_sampling();

  MrfCandidate no_oracle = quadratic_candidate(0.5);
  no_oracle.gradient_oracle = nullptr;
  CHECK_THROWS_AS(verify_mrf(pr, no_oracle, plan), std::invalid_argument);

  MrfCandidate bad_p0 = quadratic_candidate(0.0);
  CHECK_THROWS_AS(verify_mrf(pr, bad_p0, plan), std::invalid_argument);

  // sigma too large for the boundary value: 2*sigma must stay below W0
  MrfCandidate cand = quadratic_candidate(0.5);
  LevelSampling wide = plan;
  wide.sigma = 0.6;
  CHECK_THROWS_AS(verify_mrf(pr, cand, wide), std::invalid_argument);

  LevelSampling wrong_dims = plan;
  wrong_dims.box_lo = {-1.0, -1.0};
  wrong_dims.box_hi = {1.0, 1.0};
  CHECK_THROWS_AS(verify_mrf(pr, cand, wrong_dims), std::invalid_argument);
}

TEST_CASE("verifier: candidate side checks catch defects") {
  LevelSampling plan;
  plan.sigma = 0.25;
  plan.box_lo = {-1.0, -1.0};
  plan.box_hi = {1.0, 1.0};

  ControlProblem pr;
  pr.state_space = StateSpace::whole(2);
  pr.target = Target::origin(2);
  pr.control_set = ControlSet::all(2);
  pr.dynamics = [](std::span<const double>, std::span<const double>,
                   std::span<double> out) {
    out[0] = 0.0;
    out[1] = 0.0;
  };
  pr.cost = [](std::span<const double>, std::span<const double>) {
    return 0.0;
  };

  MrfCandidate good;
  good.W = [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1];
  };
  good.gradient_oracle = [](std::span<const double> x) {
    return std::vector<Vec>{Vec{2.0 * x[0], 2.0 * x[1]}};
  };
  good.p0 = 0.5;
  good.W0 = inf();
  CandidateChecks ok = check_positive_definite_proper(pr, good, plan);
  CHECK(ok.positive_definite.pass);
  CHECK(ok.properness.pass);
  CHECK(ok.boundary_value.pass);

  // negative dip near the target: not positive definite
  MrfCandidate dipped = good;
  dipped.W = [](std::span<const double> x) {
    return x[0] * x[0] + x[1] * x[1] - 0.01;
  };
  CHECK_FALSE(
      check_positive_definite_proper(pr, dipped, plan).positive_definite.pass);

  // shallow 1D parabola: the 2*sigma sublevel set spills past the sampling
  // box circumradius, so the properness proxy fails
  ControlProblem line;
  line.state_space = StateSpace::whole(1);
  line.target = Target::origin(1);
  line.control_set = ControlSet::all(1);
  line.dynamics = [](std::span<const double>, std::span<const double>,
                     std::span<double> out) { out[0] = 0.0; };
  line.cost = [](std::span<const double>, std::span<const double>) {
    return 0.0;
  };
  MrfCandidate shallow;
  shallow.W = [](std::span<const double> x) { return 0.01 * x[0] * x[0]; };
  shallow.gradient_oracle = [](std::span<const double> x) {
    return std::vector<Vec>{Vec{0.02 * x[0]}};
  };
  shallow.p0 = 0.5;
  shallow.W0 = inf();
  LevelSampling line_plan;
  line_plan.sigma = 0.25;
  line_plan.box_lo = {-1.0};
  line_plan.box_hi = {1.0};
  CHECK_FALSE(check_positive_definite_proper(line, shallow, line_plan)
                  .properness.pass);
}

TEST_CASE("verifier: boundary value check compares W against W0") {
  LevelSampling plan;
  plan.sigma = 0.1;
  plan.box_lo = {-0.9};
  plan.box_hi = {0.9};

  ControlProblem pr = scalar_problem();
  MrfCandidate cand = quadratic_candidate(0.5, 1.0);  // W -> 1 at |x| -> 1
  CandidateChecks ok = check_positive_definite_proper(pr, cand, plan);
  CHECK(ok.boundary_value.pass);

  MrfCandidate wrong = quadratic_candidate(0.5, 2.0);  // claims W0 = 2
  CandidateChecks bad = check_positive_definite_proper(pr, wrong, plan);
  CHECK_FALSE(bad.boundary_value.pass);
}

TEST_CASE("verifier: rescaling bound probe accepts a true bound") {
  // f = u, l = 0: |D_u(l,f)| = 1 and 1/(1+|u|)^2 <= 1, so eta = 1 passes
  ControlProblem pr;
  pr.state_space = StateSpace::whole(1);
  pr.target = Target::origin(1);
  pr.control_set = ControlSet::all(1);
  pr.dynamics = [](std::span<const double>, std::span<const double> u,
                   std::span<double> out) { out[0] = u[0]; };
  pr.cost = [](std::span<const double>, std::span<const double>) {
    return 0.0;
  };
  Vec lo{-1.0};
  Vec hi{1.0};
  auto eta_one = [](std::span<const double>) { return 1.05; };
  RemarkAPrimeReport rep = check_remark_A_prime(pr, eta_one, lo, hi, 200);
  CHECK(rep.pass);
  CHECK(rep.worst_ratio <= 1.0 + 1e-6);
  CHECK(rep.samples == 200);

  auto eta_small = [](std::span<const double>) { return 1e-3; };
  RemarkAPrimeReport tight = check_remark_A_prime(pr, eta_small, lo, hi, 200);
  CHECK_FALSE(tight.pass);
  CHECK(tight.text().find("worst") != std::string::npos);
}
